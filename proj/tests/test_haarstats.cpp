/*
 * Copyright 2026 The ccbs Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include <doctest.h>

#include "ccbs/haarstats.hpp"

using namespace ccbs;

TEST_CASE("histograms")
{
    const std::vector<double> values{0.0, 0.1, 0.5, 0.99, 1.0, 2.0, -1.0};
    const Histogram h = make_histogram(values, uniform_edges(0.0, 1.0, 4));
    CHECK(h.bins() == 4);
    CHECK(h.samples == values.size());
    double total = 0.0;
    for (double m : h.masses) {
        total += m;
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
    CHECK(h.masses[0] == doctest::Approx(3.0 / 7.0));
    CHECK(h.masses[3] == doctest::Approx(3.0 / 7.0));
    CHECK(histogram_overlap(h, h) == doctest::Approx(1.0));
    const Histogram g = make_histogram(std::vector<double>{0.3, 0.3}, uniform_edges(0.0, 1.0, 4));
    CHECK(histogram_overlap(h, g) == doctest::Approx(histogram_overlap(g, h)));
    CHECK(histogram_overlap(h, g) <= 1.0);
    CHECK_THROWS(histogram_overlap(h, make_histogram(values, uniform_edges(0.0, 1.0, 5))));
}

TEST_CASE("similarity")
{
    const std::vector<double> p{0.2, 0.3, 0.5};
    const std::vector<double> q{0.5, 0.3, 0.2};
    const std::vector<double> p_perm{0.5, 0.2, 0.3};
    const std::vector<double> q_perm{0.2, 0.5, 0.3};
    CHECK(similarity(p, p) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(similarity(p, q) == doctest::Approx(similarity(q, p)));
    CHECK(similarity(p, q) == doctest::Approx(similarity(p_perm, q_perm)));
    CHECK(similarity(p, q) < 1.0);
}

TEST_CASE("Haar unitaries are unitary, seeded and have the right moments")
{
    const UnitaryMatrix a = haar_unitary(32, 1);
    CHECK(a.defect() < 1e-12);
    CHECK(haar_unitary(32, 1).matrix() == a.matrix());
    double sum = 0.0;
    double sum2 = 0.0;
    const int n = 200;
    for (int s = 0; s < n; ++s) {
        const double x = std::norm(haar_unitary(32, 100 + s)(3, 5));
        sum += x;
        sum2 += x * x;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    CHECK(std::abs(mean - 1.0 / 32) < 3.0 * se);
}

TEST_CASE("input rows and gauge-fixed phases")
{
    const UnitaryMatrix u = haar_unitary(8, 3);
    const int in[] = {1, 4};
    const ComplexMatrix r = input_rows(u.matrix(), in);
    CHECK(r.rows() == 2);
    CHECK(r(1, 6) == u(6, 4));
    const RealMatrix g = gauge_fixed_phases(r);
    CHECK(g.row(0).isZero(1e-14));
    CHECK(g.col(0).isZero(1e-14));
    const double quad = std::arg(r(0, 0) * r(1, 3) / (r(1, 0) * r(0, 3)));
    CHECK(std::abs(wrap_phase(g(1, 3) - quad)) < 1e-12);
}

TEST_CASE("statistical tests")
{
    std::vector<double> even;
    for (int k = 0; k < 1000; ++k) {
        even.push_back((k + 0.5) / 1000.0);
    }
    CHECK(ks_uniform_test(even, 0.0, 1.0).p_value > 0.99);
    std::vector<double> skew;
    for (int k = 0; k < 1000; ++k) {
        skew.push_back(std::pow((k + 0.5) / 1000.0, 2));
    }
    CHECK(ks_uniform_test(skew, 0.0, 1.0).p_value < 1e-6);

    const std::vector<double> counts{25, 25, 25, 25};
    const std::vector<double> probs{0.25, 0.25, 0.25, 0.25};
    const TestResult chi = chi_square_test(counts, probs);
    CHECK(chi.statistic == doctest::Approx(0.0));
    CHECK(chi.dof == 3);
    CHECK(chi.p_value == doctest::Approx(1.0));

    const auto edges = uniform_edges(0.0, 1.0, 10);
    const auto bins = haar_squared_modulus_bin_probabilities(32, edges);
    double total = 0.0;
    for (double b : bins) {
        total += b;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(bins[0] == doctest::Approx(1.0 - std::pow(0.9, 31)).epsilon(1e-12));
}

TEST_CASE("Haar column similarity distribution")
{
    const Histogram h = column_similarity_distribution(32, 2000, 9, 20);
    double mass = 0.0;
    double mean = 0.0;
    for (std::size_t b = 0; b < h.bins(); ++b) {
        mass += h.masses[b];
        mean += h.masses[b] * 0.5 * (h.edges[b] + h.edges[b + 1]);
    }
    CHECK(mass == doctest::Approx(1.0));
    CHECK(mean > 0.5);
    CHECK(mean < 0.9);
}

TEST_CASE("pooled Haar submatrix phases are flat")
{
    std::vector<ComplexMatrix> subs;
    const int in[] = {0, 1, 2};
    for (int s = 0; s < 15; ++s) {
        subs.push_back(input_rows(haar_unitary(32, 500 + s).matrix(), in));
    }
    const auto hist = ensemble_moduli_phase_histograms(subs, 10);
    CHECK(hist.phases.samples == 15u * 2u * 31u);
    const double n = static_cast<double>(hist.phases.samples);
    for (double m : hist.phases.masses) {
        CHECK(std::abs(m - 0.1) < 4.0 * std::sqrt(0.1 * 0.9 / n));
    }
}
