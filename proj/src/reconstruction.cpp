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


#include "ccbs/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <random>

#include "ccbs/random.hpp"
#include "least_squares.hpp"

namespace ccbs {

namespace {

void check_hom_indices(const ComplexMatrix& u, int h, int k, int i, int j)
{
    const auto m = u.rows();
    if (u.cols() != m) {
        throw DomainError("HOM quantities need a square unitary");
    }
    for (int idx : {h, k, i, j}) {
        if (idx < 0 || idx >= m) {
            throw DomainError("mode index outside the unitary");
        }
    }
    if (h == k || i == j) {
        throw DomainError("HOM pairs need two distinct inputs and two distinct outputs");
    }
}

std::size_t pair_index(int i, int j, int m)
{
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(m) - static_cast<std::size_t>(i) * (i + 1) / 2 +
           static_cast<std::size_t>(j - i - 1);
}

double median_of(std::vector<double> v)
{
    if (v.empty()) {
        return 0.0;
    }
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    return v[mid];
}

struct RowPair {
    int p = 0;
    int q = 0;
    const HomPairData* data = nullptr;
};

std::vector<RowPair> row_pairs(const HomDataset& dataset)
{
    std::vector<RowPair> out;
    for (const auto& pair : dataset.pairs) {
        out.push_back({dataset.row_of(pair.h), dataset.row_of(pair.k), &pair});
    }
    return out;
}

void require_connected(const HomDataset& dataset)
{
    const int rows = dataset.rows();
    if (rows < 2) {
        throw UnderdeterminedError("reconstruction needs at least two input rows");
    }
    std::vector<int> parent(static_cast<std::size_t>(rows));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) {
            x = parent[x] = parent[parent[x]];
        }
        return x;
    };
    int components = rows;
    for (const auto& rp : row_pairs(dataset)) {
        const int a = find(rp.p);
        const int b = find(rp.q);
        if (a != b) {
            parent[a] = b;
            --components;
        }
    }
    if (components != 1) {
        throw UnderdeterminedError("input pairs do not connect all " + std::to_string(rows) +
                                   " rows; need at least " + std::to_string(rows - 1) + " linked pairs");
    }
}

// Noise floors: 1e-6 of the plateau, with the median plateau standing in for a = 0.
double floor_scale(const HomDataset& dataset)
{
    std::vector<double> as;
    for (const auto& pair : dataset.pairs) {
        for (const auto& e : pair.entries) {
            if (e.a > 0.0) {
                as.push_back(e.a);
            }
        }
    }
    const double med = median_of(std::move(as));
    return med > 0.0 ? med : 1.0;
}

double err_floor(double err, double level, double scale)
{
    return std::max({err, 1e-6 * level, 1e-6 * scale});
}

} // namespace

// ------------------------------------------------------------------ HOM

double hom_plateau(const ComplexMatrix& u, int h, int k, int i, int j)
{
    check_hom_indices(u, h, k, i, j);
    return std::norm(u(i, h)) * std::norm(u(j, k)) + std::norm(u(j, h)) * std::norm(u(i, k));
}

double hom_coincidence(const ComplexMatrix& u, int h, int k, int i, int j)
{
    check_hom_indices(u, h, k, i, j);
    return std::norm(u(i, h) * u(j, k) + u(j, h) * u(i, k));
}

double hom_visibility(const ComplexMatrix& u, int h, int k, int i, int j)
{
    const double a = hom_plateau(u, h, k, i, j);
    if (!(a > 0.0)) {
        throw DomainError("visibility undefined for a zero plateau");
    }
    return (a - hom_coincidence(u, h, k, i, j)) / a;
}

double hom_visibility_phase_form(const ComplexMatrix& u, int h, int k, int i, int j)
{
    const double a = hom_plateau(u, h, k, i, j);
    if (!(a > 0.0)) {
        throw DomainError("visibility undefined for a zero plateau");
    }
    const double rho = std::abs(u(i, h)) * std::abs(u(j, k)) * std::abs(u(j, h)) * std::abs(u(i, k));
    const double theta = std::arg(u(i, h)) + std::arg(u(j, k)) - std::arg(u(j, h)) - std::arg(u(i, k));
    return -2.0 * rho / a * std::cos(theta);
}

// ------------------------------------------------------------- dip scans

double dip_model(double x, double a, double amplitude, double x0, double sigma)
{
    const double t = (x - x0) / sigma;
    return a * (1.0 + amplitude * std::exp(-0.5 * t * t));
}

std::vector<double> scan_positions(double x0, double sigma, int points, double span_sigmas)
{
    if (points < 2 || !(sigma > 0.0) || !(span_sigmas > 0.0)) {
        throw DomainError("scan grid needs >= 2 points and positive width");
    }
    std::vector<double> x(static_cast<std::size_t>(points));
    const double half = span_sigmas * sigma;
    for (int p = 0; p < points; ++p) {
        x[p] = x0 - half + 2.0 * half * p / (points - 1);
    }
    return x;
}

std::vector<double> simulate_dip_scan(double a, double amplitude, double x0, double sigma,
                                      std::span<const double> positions, double mean_counts, std::uint64_t seed,
                                      bool noiseless)
{
    if (a < 0.0 || !(sigma > 0.0) || mean_counts < 0.0) {
        throw DomainError("dip scan needs a >= 0, sigma > 0 and mean_counts >= 0");
    }
    std::vector<double> counts(positions.size());
    Rng rng(seed);
    for (std::size_t p = 0; p < positions.size(); ++p) {
        const double mu = std::max(0.0, mean_counts * dip_model(positions[p], a, amplitude, x0, sigma));
        if (noiseless) {
            counts[p] = mu;
        } else if (mu > 0.0) {
            std::poisson_distribution<long long> poisson(mu);
            counts[p] = static_cast<double>(poisson(rng));
        }
    }
    return counts;
}

namespace {

DipFit fit_fixed_shape(std::span<const double> x, std::span<const double> c, double x0, double sigma,
                       double scale)
{
    // Linear in (A, A * amplitude).
    const auto n = static_cast<Eigen::Index>(x.size());
    RealMatrix design(n, 2);
    RealVector rhs(n);
    for (Eigen::Index p = 0; p < n; ++p) {
        const double w = 1.0 / std::sqrt(std::max(c[p], 1.0));
        const double t = (x[p] - x0) / sigma;
        design(p, 0) = w;
        design(p, 1) = w * std::exp(-0.5 * t * t);
        rhs(p) = w * c[p];
    }
    const RealVector beta = design.colPivHouseholderQr().solve(rhs);
    const RealMatrix cov = (design.transpose() * design).inverse();
    DipFit fit;
    fit.a = beta(0) / scale;
    fit.amplitude = beta(0) != 0.0 ? beta(1) / beta(0) : 0.0;
    fit.x0 = x0;
    fit.sigma = sigma;
    // Delta method for amplitude = beta1 / beta0.
    if (beta(0) != 0.0) {
        Eigen::Vector2d g(-beta(1) / (beta(0) * beta(0)), 1.0 / beta(0));
        fit.err_amplitude = std::sqrt(std::max(0.0, g.dot(cov * g)));
        fit.cov_a_amplitude = (cov(0, 0) * g(0) + cov(0, 1) * g(1)) / scale;
    }
    fit.err_a = std::sqrt(cov(0, 0)) / scale;
    fit.chi2 = (design * beta - rhs).squaredNorm();
    return fit;
}

} // namespace

DipFit fit_dip(std::span<const double> positions, std::span<const double> counts, double count_scale)
{
    const auto n = positions.size();
    if (n != counts.size()) {
        throw DomainError("fit_dip: positions and counts differ in length");
    }
    if (n < 8) {
        throw DomainError("fit_dip needs at least 8 scan positions");
    }
    if (!(count_scale > 0.0)) {
        throw DomainError("fit_dip: count scale must be positive");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto l, auto r) { return positions[l] < positions[r]; });
    const double lo = positions[order.front()];
    const double hi = positions[order.back()];
    if (!(hi > lo)) {
        throw DomainError("fit_dip: positions must span a range");
    }

    // Plateau from the outer quarter of the scan.
    const double mid = 0.5 * (lo + hi);
    std::vector<std::size_t> by_dist = order;
    std::sort(by_dist.begin(), by_dist.end(), [&](auto l, auto r) {
        return std::abs(positions[l] - mid) > std::abs(positions[r] - mid);
    });
    const std::size_t outer = std::max<std::size_t>(2, n / 4);
    double plateau = 0.0;
    for (std::size_t q = 0; q < outer; ++q) {
        plateau += counts[by_dist[q]];
    }
    plateau /= static_cast<double>(outer);
    if (!(plateau > 0.0)) {
        throw FitError("fit_dip: zero plateau counts");
    }
    std::size_t ext = order.front();
    for (auto p : order) {
        if (std::abs(counts[p] - plateau) > std::abs(counts[ext] - plateau)) {
            ext = p;
        }
    }
    const double depth = counts[ext] - plateau;
    double sigma0 = (hi - lo) / 6.0;
    if (depth != 0.0) {
        double left = positions[ext];
        double right = positions[ext];
        for (auto p : order) {
            if ((counts[p] - plateau) / depth >= 0.5) {
                left = std::min(left, positions[p]);
                right = std::max(right, positions[p]);
            }
        }
        const double spacing = (hi - lo) / static_cast<double>(n - 1);
        sigma0 = std::max(right - left, spacing) / 2.3548200450309493;
    }

    std::vector<double> weights(n);
    for (std::size_t p = 0; p < n; ++p) {
        weights[p] = 1.0 / std::sqrt(std::max(counts[p], 1.0));
    }
    auto residual = [&](const RealVector& v, RealVector& r) {
        for (std::size_t p = 0; p < n; ++p) {
            r(static_cast<Eigen::Index>(p)) =
                (dip_model(positions[p], v(0), v(1), v(2), v(3)) - counts[p]) * weights[p];
        }
    };
    auto jacobian = [&](const RealVector& v, RealMatrix& jac) {
        for (std::size_t p = 0; p < n; ++p) {
            const double dx = positions[p] - v(2);
            const double s2 = v(3) * v(3);
            const double g = std::exp(-0.5 * dx * dx / s2);
            const auto row = static_cast<Eigen::Index>(p);
            jac(row, 0) = (1.0 + v(1) * g) * weights[p];
            jac(row, 1) = v(0) * g * weights[p];
            jac(row, 2) = v(0) * v(1) * g * dx / s2 * weights[p];
            jac(row, 3) = v(0) * v(1) * g * dx * dx / (s2 * v(3)) * weights[p];
        }
    };
    RealVector v0(4);
    v0 << plateau, depth / plateau, positions[ext], sigma0;
    detail::LeastSquaresOptions opts;
    opts.max_evaluations = 400;
    const auto res = detail::least_squares(residual, jacobian, v0, static_cast<int>(n), opts);
    if (!res.converged || !res.x.allFinite()) {
        throw FitError("fit_dip did not converge (" + res.status + ", " + std::to_string(res.iterations) +
                       " iterations, chi2 " + std::to_string(res.cost) + ")");
    }
    const RealMatrix jtj = res.jacobian.transpose() * res.jacobian;
    const RealMatrix cov = jtj.completeOrthogonalDecomposition().pseudoInverse();

    DipFit fit;
    fit.a = res.x(0) / count_scale;
    fit.amplitude = res.x(1);
    fit.x0 = res.x(2);
    fit.sigma = std::abs(res.x(3));
    fit.err_a = std::sqrt(std::max(0.0, cov(0, 0))) / count_scale;
    fit.err_amplitude = std::sqrt(std::max(0.0, cov(1, 1)));
    fit.err_x0 = std::sqrt(std::max(0.0, cov(2, 2)));
    fit.err_sigma = std::sqrt(std::max(0.0, cov(3, 3)));
    fit.cov_a_amplitude = cov(0, 1) / count_scale;
    fit.chi2 = res.cost;
    fit.iterations = res.iterations;
    if (std::abs(fit.amplitude) > 3.0 * fit.err_amplitude && hi - lo < 4.0 * fit.sigma) {
        throw FitError("fit_dip: scan spans less than 4 sigma of the fitted dip");
    }
    return fit;
}

// --------------------------------------------------------------- dataset

int HomDataset::row_of(int mode) const
{
    const auto it = std::find(inputs.begin(), inputs.end(), mode);
    if (it == inputs.end()) {
        throw ConfigError("input mode " + std::to_string(mode) + " is not one of the dataset rows");
    }
    return static_cast<int>(it - inputs.begin());
}

void HomDataset::validate() const
{
    if (m < 2) {
        throw ConfigError("HOM dataset needs m >= 2 outputs");
    }
    for (std::size_t r = 0; r < inputs.size(); ++r) {
        if (inputs[r] < 0 || inputs[r] >= m) {
            throw ConfigError("dataset input mode outside [0, m)");
        }
        if (std::find(inputs.begin(), inputs.begin() + static_cast<std::ptrdiff_t>(r), inputs[r]) !=
            inputs.begin() + static_cast<std::ptrdiff_t>(r)) {
            throw ConfigError("dataset input modes must be distinct");
        }
    }
    const std::size_t expected = static_cast<std::size_t>(m) * (m - 1) / 2;
    for (const auto& pair : pairs) {
        if (pair.h == pair.k) {
            throw ConfigError("input pair needs two distinct modes");
        }
        (void)row_of(pair.h);
        (void)row_of(pair.k);
        if (pair.entries.size() != expected) {
            throw ConfigError("input pair (" + std::to_string(pair.h) + "," + std::to_string(pair.k) + ") has " +
                              std::to_string(pair.entries.size()) + " output pairs, expected " +
                              std::to_string(expected));
        }
        for (const auto& e : pair.entries) {
            if (e.i < 0 || e.j <= e.i || e.j >= m || pair_index(e.i, e.j, m) != static_cast<std::size_t>(&e - pair.entries.data())) {
                throw ConfigError("output pairs must be i < j in lexicographic order");
            }
            if (!(e.a >= 0.0) || !std::isfinite(e.a)) {
                throw ConfigError("plateau values must be finite and non-negative");
            }
            if (e.defined && !std::isfinite(e.V)) {
                throw ConfigError("defined visibility must be finite");
            }
            if (e.err_a < 0.0 || e.err_b < 0.0) {
                throw ConfigError("uncertainties must be non-negative");
            }
        }
    }
    if (intensities && (intensities->rows() != rows() || intensities->cols() != m)) {
        throw ConfigError("intensity table must be rows x m");
    }
}

std::vector<std::pair<int, int>> default_input_pairs(std::span<const int> inputs)
{
    std::vector<std::pair<int, int>> pairs;
    for (std::size_t r = 1; r < inputs.size(); ++r) {
        pairs.emplace_back(inputs[0], inputs[r]);
    }
    return pairs;
}

HomDataset synthesize_dataset(const ComplexMatrix& u, std::span<const int> inputs,
                              std::span<const std::pair<int, int>> pairs, const SynthesisOptions& options,
                              std::vector<DipRecord>* records)
{
    const int m = static_cast<int>(u.rows());
    if (u.cols() != m) {
        throw ConfigError("dataset synthesis needs a square unitary");
    }
    if (options.median_counts < 0.0 || options.intensity_counts < 0.0 || options.relative_noise < 0.0) {
        throw ConfigError("count levels must be non-negative");
    }
    HomDataset ds;
    ds.m = m;
    ds.inputs.assign(inputs.begin(), inputs.end());
    for (const auto& [h, k] : pairs) {
        HomPairData pd;
        pd.h = h;
        pd.k = k;
        ds.pairs.push_back(std::move(pd));
    }
    // Validate modes before evaluating anything.
    {
        HomDataset probe = ds;
        for (auto& pd : probe.pairs) {
            pd.entries.clear();
        }
        for (int mode : ds.inputs) {
            if (mode < 0 || mode >= m) {
                throw ConfigError("input mode outside the unitary");
            }
        }
        for (const auto& pd : probe.pairs) {
            if (pd.h == pd.k) {
                throw ConfigError("input pair needs two distinct modes");
            }
            (void)probe.row_of(pd.h);
            (void)probe.row_of(pd.k);
        }
    }

    const std::size_t per_pair = static_cast<std::size_t>(m) * (m - 1) / 2;
    std::vector<double> true_a;
    std::vector<double> true_b;
    for (const auto& pd : ds.pairs) {
        for (int i = 0; i < m; ++i) {
            for (int j = i + 1; j < m; ++j) {
                true_a.push_back(hom_plateau(u, pd.h, pd.k, i, j));
                const double q = hom_coincidence(u, pd.h, pd.k, i, j);
                const double vis = true_a.back() > 0.0 ? (true_a.back() - q) / true_a.back() : 0.0;
                true_b.push_back(true_a.back() * (1.0 - options.visibility_scale * vis));
            }
        }
    }
    std::vector<double> positive;
    for (double a : true_a) {
        if (a > 0.0) {
            positive.push_back(a);
        }
    }
    const double med = median_of(positive);
    const bool noisy = options.median_counts > 0.0;
    // Counts per unit probability; noiseless data keep nominal 1e4-count weights.
    const double scale = (noisy ? options.median_counts : 1e4) / (med > 0.0 ? med : 1.0);

    const std::size_t total = true_a.size();
    std::vector<HomEntry> entries(total);
    std::vector<DipRecord> recs(options.method == SynthesisMethod::scan ? total : 0);
    const auto positions = options.method == SynthesisMethod::scan
                               ? scan_positions(options.dip_x0_um, options.dip_sigma_um, options.scan_points,
                                                options.scan_span_sigmas)
                               : std::vector<double>{};
    const auto count = static_cast<std::ptrdiff_t>(total);
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic, 16)
#endif
    for (std::ptrdiff_t t = 0; t < count; ++t) {
        const auto pidx = static_cast<std::size_t>(t) / per_pair;
        const auto& pd = ds.pairs[pidx];
        std::size_t rem = static_cast<std::size_t>(t) % per_pair;
        int i = 0;
        while (rem >= static_cast<std::size_t>(m - 1 - i)) {
            rem -= static_cast<std::size_t>(m - 1 - i);
            ++i;
        }
        const int j = i + 1 + static_cast<int>(rem);
        const double a = true_a[t];
        const double b = true_b[t];
        const std::uint64_t seed = derive_seed(options.seed, "hom", static_cast<std::uint64_t>(t));
        HomEntry e;
        e.i = i;
        e.j = j;
        if (options.method == SynthesisMethod::direct) {
            double am = a;
            double bm = b;
            if (noisy) {
                Rng rng(seed);
                auto draw = [&](double mu) {
                    if (!(mu > 0.0)) {
                        return 0.0;
                    }
                    std::poisson_distribution<long long> poisson(mu);
                    return static_cast<double>(poisson(rng));
                };
                am = draw(scale * a) / scale;
                bm = draw(scale * b) / scale;
            }
            e.err_a = std::sqrt(std::max(scale * am, 1.0)) / scale;
            e.err_b = std::sqrt(std::max(scale * bm, 1.0)) / scale;
            if (options.relative_noise > 0.0) {
                Rng rng(derive_seed(seed, "relative"));
                std::normal_distribution<double> normal(0.0, 1.0);
                const double fa = 1.0 + options.relative_noise * normal(rng);
                const double fb = 1.0 + options.relative_noise * normal(rng);
                am = std::max(0.0, am * fa);
                bm = std::max(0.0, bm * fb);
                e.err_a = std::hypot(e.err_a, options.relative_noise * am);
                e.err_b = std::hypot(e.err_b, options.relative_noise * bm);
            }
            e.a = am;
            e.defined = am > 0.0;
            e.V = e.defined ? (am - bm) / am : 0.0;
        } else {
            DipRecord rec;
            rec.h = pd.h;
            rec.k = pd.k;
            rec.i = i;
            rec.j = j;
            rec.positions = positions;
            const double amplitude = a > 0.0 ? b / a - 1.0 : 0.0;
            rec.counts = simulate_dip_scan(a, amplitude, options.dip_x0_um, options.dip_sigma_um, positions, scale,
                                           seed, !noisy);
            const double sum = std::accumulate(rec.counts.begin(), rec.counts.end(), 0.0);
            if (sum > 0.0) {
                DipFit fit;
                try {
                    fit = fit_dip(rec.positions, rec.counts, scale);
                    rec.fitted = true;
                } catch (const FitError&) {
                    fit = fit_fixed_shape(rec.positions, rec.counts, options.dip_x0_um, options.dip_sigma_um, scale);
                }
                rec.fit = fit;
                e.a = std::max(0.0, fit.a);
                e.defined = fit.a > 0.0;
                e.V = e.defined ? -fit.amplitude : 0.0;
                const double db_da = 1.0 + fit.amplitude;
                const double var_b = db_da * db_da * fit.err_a * fit.err_a +
                                     fit.a * fit.a * fit.err_amplitude * fit.err_amplitude +
                                     2.0 * fit.a * db_da * fit.cov_a_amplitude;
                e.err_a = fit.err_a;
                e.err_b = std::sqrt(std::max(0.0, var_b));
            } else {
                e.err_a = 1.0 / scale;
                e.err_b = 1.0 / scale;
            }
            recs[t] = std::move(rec);
        }
        e.err_a = std::max(e.err_a, 1e-6 * e.a);
        e.err_b = std::max(e.err_b, 1e-6 * e.a);
        entries[t] = e;
    }
    for (std::size_t p = 0; p < ds.pairs.size(); ++p) {
        ds.pairs[p].entries.assign(entries.begin() + static_cast<std::ptrdiff_t>(p * per_pair),
                                   entries.begin() + static_cast<std::ptrdiff_t>((p + 1) * per_pair));
    }

    if (options.with_intensities) {
        RealMatrix rows(ds.rows(), m);
        const double n_int = options.intensity_counts > 0.0 ? options.intensity_counts
                                                            : (noisy ? options.median_counts * m : 0.0);
        Rng rng(derive_seed(options.seed, "intensity"));
        for (int r = 0; r < ds.rows(); ++r) {
            for (int o = 0; o < m; ++o) {
                const double p = std::norm(u(o, ds.inputs[r]));
                if (n_int > 0.0 && p > 0.0) {
                    std::poisson_distribution<long long> poisson(n_int * p);
                    rows(r, o) = static_cast<double>(poisson(rng)) / n_int;
                } else {
                    rows(r, o) = p;
                }
            }
        }
        ds.intensities = std::move(rows);
    }
    if (records) {
        *records = std::move(recs);
    }
    return ds;
}

// -------------------------------------------------------------- moduli

RealMatrix reconstruct_moduli(const HomDataset& dataset, const ModuliOptions& options)
{
    dataset.validate();
    require_connected(dataset);
    if (!(options.normalization_sigma > 0.0)) {
        throw ConfigError("normalization sigma must be positive");
    }
    const int rows = dataset.rows();
    const int m = dataset.m;
    const auto rp = row_pairs(dataset);
    const double fscale = floor_scale(dataset);

    RealMatrix init = RealMatrix::Zero(rows, m);
    if (dataset.intensities) {
        for (int r = 0; r < rows; ++r) {
            const double total = dataset.intensities->row(r).sum();
            for (int o = 0; o < m; ++o) {
                init(r, o) = total > 0.0 ? std::sqrt(std::max(0.0, (*dataset.intensities)(r, o)) / total) : 0.0;
            }
        }
    } else {
        // Row marginals: sum_j a_oj ~ x_o + y_o for unit-norm rows.
        RealMatrix acc = RealMatrix::Zero(rows, m);
        RealVector seen = RealVector::Zero(rows);
        for (const auto& pair : rp) {
            RealVector marg = RealVector::Zero(m);
            for (const auto& e : pair.data->entries) {
                marg(e.i) += e.a;
                marg(e.j) += e.a;
            }
            acc.row(pair.p) += 0.5 * marg.transpose();
            acc.row(pair.q) += 0.5 * marg.transpose();
            seen(pair.p) += 1.0;
            seen(pair.q) += 1.0;
        }
        for (int r = 0; r < rows; ++r) {
            const RealVector x = acc.row(r).transpose() / seen(r);
            const double total = x.sum();
            for (int o = 0; o < m; ++o) {
                init(r, o) = total > 0.0 ? std::sqrt(std::max(0.0, x(o)) / total) : 1.0 / std::sqrt(m);
            }
        }
    }
    // Keep strictly positive starts so no gradient vanishes identically.
    for (int r = 0; r < rows; ++r) {
        for (int o = 0; o < m; ++o) {
            init(r, o) = std::max(init(r, o), 1e-3 / std::sqrt(m));
        }
    }

    struct Term {
        int p, q, i, j;
        double a, inv_err;
    };
    std::vector<Term> terms;
    for (const auto& pair : rp) {
        for (const auto& e : pair.data->entries) {
            terms.push_back({pair.p, pair.q, e.i, e.j, e.a, 1.0 / err_floor(e.err_a, e.a, fscale)});
        }
    }
    const int n_terms = static_cast<int>(terms.size());
    const int n_res = n_terms + rows;
    const double inv_norm = 1.0 / options.normalization_sigma;
    auto at = [m](const RealVector& v, int r, int o) { return v(static_cast<Eigen::Index>(r) * m + o); };

    auto residual = [&](const RealVector& v, RealVector& res) {
        for (int t = 0; t < n_terms; ++t) {
            const auto& tm = terms[t];
            const double xi = at(v, tm.p, tm.i);
            const double xj = at(v, tm.p, tm.j);
            const double yi = at(v, tm.q, tm.i);
            const double yj = at(v, tm.q, tm.j);
            res(t) = (xi * xi * yj * yj + xj * xj * yi * yi - tm.a) * tm.inv_err;
        }
        for (int r = 0; r < rows; ++r) {
            const auto seg = v.segment(static_cast<Eigen::Index>(r) * m, m);
            res(n_terms + r) = (seg.squaredNorm() - 1.0) * inv_norm;
        }
    };
    auto jacobian = [&](const RealVector& v, RealMatrix& jac) {
        jac.setZero();
        for (int t = 0; t < n_terms; ++t) {
            const auto& tm = terms[t];
            const double xi = at(v, tm.p, tm.i);
            const double xj = at(v, tm.p, tm.j);
            const double yi = at(v, tm.q, tm.i);
            const double yj = at(v, tm.q, tm.j);
            jac(t, static_cast<Eigen::Index>(tm.p) * m + tm.i) = 2.0 * xi * yj * yj * tm.inv_err;
            jac(t, static_cast<Eigen::Index>(tm.p) * m + tm.j) = 2.0 * xj * yi * yi * tm.inv_err;
            jac(t, static_cast<Eigen::Index>(tm.q) * m + tm.i) = 2.0 * yi * xj * xj * tm.inv_err;
            jac(t, static_cast<Eigen::Index>(tm.q) * m + tm.j) = 2.0 * yj * xi * xi * tm.inv_err;
        }
        for (int r = 0; r < rows; ++r) {
            for (int o = 0; o < m; ++o) {
                jac(n_terms + r, static_cast<Eigen::Index>(r) * m + o) = 2.0 * at(v, r, o) * inv_norm;
            }
        }
    };
    RealVector v0(static_cast<Eigen::Index>(rows) * m);
    for (int r = 0; r < rows; ++r) {
        for (int o = 0; o < m; ++o) {
            v0(static_cast<Eigen::Index>(r) * m + o) = init(r, o);
        }
    }
    detail::LeastSquaresOptions opts;
    opts.max_evaluations = 5000;
    const auto res = detail::least_squares(residual, jacobian, v0, n_res, opts);
    if (!res.x.allFinite()) {
        throw NumericalError("moduli fit produced non-finite values");
    }
    RealMatrix moduli(rows, m);
    for (int r = 0; r < rows; ++r) {
        for (int o = 0; o < m; ++o) {
            moduli(r, o) = std::abs(at(res.x, r, o));
        }
    }
    return moduli;
}

// -------------------------------------------------------------- phases

ComplexMatrix ReconstructedSubmatrix::matrix() const
{
    ComplexMatrix out(moduli.rows(), moduli.cols());
    for (Eigen::Index r = 0; r < moduli.rows(); ++r) {
        for (Eigen::Index o = 0; o < moduli.cols(); ++o) {
            out(r, o) = std::polar(moduli(r, o), phases(r, o));
        }
    }
    return out;
}

namespace {

struct PhaseProblem {
    struct Term {
        int p, q, i, j;
        double b, inv_err;
    };
    int rows = 0;
    int m = 0;
    std::vector<Term> terms;
    double inv_orth = 0.0;

    int n_params() const { return (rows - 1) * (m - 1); }
    int n_pairs() const { return inv_orth > 0.0 ? rows * (rows - 1) / 2 : 0; }
    int n_residuals() const { return static_cast<int>(terms.size()) + 2 * n_pairs(); }
};

PhaseProblem make_phase_problem(const HomDataset& dataset, const PhaseOptions& options)
{
    PhaseProblem pp;
    pp.rows = dataset.rows();
    pp.m = dataset.m;
    pp.inv_orth = options.orthogonality_sigma > 0.0 ? 1.0 / options.orthogonality_sigma : 0.0;
    const double fscale = floor_scale(dataset);
    for (const auto& rp : row_pairs(dataset)) {
        for (const auto& e : rp.data->entries) {
            if (!e.defined) {
                continue;
            }
            pp.terms.push_back({rp.p, rp.q, e.i, e.j, e.coincidence(), 1.0 / err_floor(e.err_b, e.a, fscale)});
        }
    }
    return pp;
}

ComplexMatrix assemble(const RealMatrix& moduli, const RealVector& v, const RealMatrix& base_phases)
{
    const auto rows = moduli.rows();
    const auto m = moduli.cols();
    ComplexMatrix z(rows, m);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index o = 0; o < m; ++o) {
            const double th = (r == 0 || o == 0) ? base_phases(r, o) : v((r - 1) * (m - 1) + (o - 1));
            z(r, o) = std::polar(moduli(r, o), th);
        }
    }
    return z;
}

void phase_residuals(const PhaseProblem& pp, const ComplexMatrix& z, RealVector& res)
{
    const int nt = static_cast<int>(pp.terms.size());
    for (int t = 0; t < nt; ++t) {
        const auto& tm = pp.terms[t];
        const Complex amp = z(tm.p, tm.i) * z(tm.q, tm.j) + z(tm.p, tm.j) * z(tm.q, tm.i);
        res(t) = (std::norm(amp) - tm.b) * tm.inv_err;
    }
    if (pp.inv_orth > 0.0) {
        int k = nt;
        for (int r = 0; r < pp.rows; ++r) {
            for (int s = r + 1; s < pp.rows; ++s) {
                const Complex ip = (z.row(r).array() * z.row(s).array().conjugate()).sum();
                res(k++) = ip.real() * pp.inv_orth;
                res(k++) = ip.imag() * pp.inv_orth;
            }
        }
    }
}

void phase_jacobian(const PhaseProblem& pp, const ComplexMatrix& z, RealMatrix& jac)
{
    jac.setZero();
    const int m = pp.m;
    auto col = [m](int r, int o) { return r == 0 || o == 0 ? -1 : (r - 1) * (m - 1) + (o - 1); };
    const Complex I(0.0, 1.0);
    const int nt = static_cast<int>(pp.terms.size());
    for (int t = 0; t < nt; ++t) {
        const auto& tm = pp.terms[t];
        const Complex t1 = z(tm.p, tm.i) * z(tm.q, tm.j);
        const Complex t2 = z(tm.p, tm.j) * z(tm.q, tm.i);
        const Complex amp_c = std::conj(t1 + t2);
        const double g1 = 2.0 * std::real(amp_c * I * t1) * tm.inv_err;
        const double g2 = 2.0 * std::real(amp_c * I * t2) * tm.inv_err;
        if (int c = col(tm.p, tm.i); c >= 0) {
            jac(t, c) += g1;
        }
        if (int c = col(tm.q, tm.j); c >= 0) {
            jac(t, c) += g1;
        }
        if (int c = col(tm.p, tm.j); c >= 0) {
            jac(t, c) += g2;
        }
        if (int c = col(tm.q, tm.i); c >= 0) {
            jac(t, c) += g2;
        }
    }
    if (pp.inv_orth > 0.0) {
        int k = nt;
        for (int r = 0; r < pp.rows; ++r) {
            for (int s = r + 1; s < pp.rows; ++s) {
                for (int o = 0; o < m; ++o) {
                    const Complex d = I * z(r, o) * std::conj(z(s, o)) * pp.inv_orth;
                    if (int c = col(r, o); c >= 0) {
                        jac(k, c) += d.real();
                        jac(k + 1, c) += d.imag();
                    }
                    if (int c = col(s, o); c >= 0) {
                        jac(k, c) -= d.real();
                        jac(k + 1, c) -= d.imag();
                    }
                }
                k += 2;
            }
        }
    }
}

RealVector free_phases(const RealMatrix& phases)
{
    const auto rows = phases.rows();
    const auto m = phases.cols();
    RealVector v((rows - 1) * (m - 1));
    for (Eigen::Index r = 1; r < rows; ++r) {
        for (Eigen::Index o = 1; o < m; ++o) {
            v((r - 1) * (m - 1) + (o - 1)) = phases(r, o);
        }
    }
    return v;
}

void check_candidate(const ReconstructedSubmatrix& c, const HomDataset& dataset)
{
    if (c.moduli.rows() != dataset.rows() || c.moduli.cols() != dataset.m || c.phases.rows() != c.moduli.rows() ||
        c.phases.cols() != c.moduli.cols()) {
        throw ConfigError("candidate shape does not match the dataset");
    }
}

// Relative phase d(o) = theta_q(o) - theta_p(o) for one input pair, up to a
// common offset and a global sign.
RealVector chain_relative_phase(const RowPair& rp, const RealMatrix& moduli, int m, const PhaseOptions& options)
{
    const double tiny = 1e-300;
    RealMatrix cosv = RealMatrix::Constant(m, m, std::numeric_limits<double>::quiet_NaN());
    RealMatrix weight = RealMatrix::Zero(m, m);
    for (const auto& e : rp.data->entries) {
        if (!e.defined) {
            continue;
        }
        const double prod =
            moduli(rp.p, e.i) * moduli(rp.q, e.j) * moduli(rp.p, e.j) * moduli(rp.q, e.i);
        if (!(prod > tiny)) {
            continue;
        }
        double c = -e.V * e.a / (2.0 * prod);
        const double sigma_c = std::hypot(e.err_a * e.V, e.err_b) / (2.0 * prod);
        const double tol = std::max(options.cos_tolerance, 5.0 * sigma_c);
        if (std::abs(c) > 1.0 + tol) {
            throw InconsistentDataError("visibility of outputs (" + std::to_string(e.i) + "," +
                                        std::to_string(e.j) + ") for inputs (" + std::to_string(rp.data->h) + "," +
                                        std::to_string(rp.data->k) + ") needs |cos| = " + std::to_string(std::abs(c)));
        }
        c = std::clamp(c, -1.0, 1.0);
        cosv(e.i, e.j) = cosv(e.j, e.i) = c;
        weight(e.i, e.j) = weight(e.j, e.i) = prod * prod;
    }

    RealVector w(m);
    for (int o = 0; o < m; ++o) {
        w(o) = moduli(rp.p, o) * moduli(rp.q, o);
    }
    RealVector d = RealVector::Zero(m);
    int root = 0;
    w.maxCoeff(&root);
    if (!(w(root) > tiny)) {
        return d;
    }
    std::vector<int> order;
    for (int o = 0; o < m; ++o) {
        if (o != root && w(o) > tiny && !std::isnan(cosv(root, o))) {
            order.push_back(o);
        }
    }
    std::stable_sort(order.begin(), order.end(), [&](int l, int r) { return w(l) > w(r); });
    RealVector alpha = RealVector::Zero(m);
    for (int o : order) {
        alpha(o) = std::acos(cosv(root, o));
    }
    // Anchor: the best-conditioned sign, fixed positive.
    int anchor = -1;
    double best = 0.0;
    for (int o : order) {
        const double score = w(o) * std::sin(alpha(o));
        if (score > best) {
            best = score;
            anchor = o;
        }
    }
    std::vector<int> placed{root};
    if (anchor >= 0) {
        d(anchor) = alpha(anchor);
        placed.push_back(anchor);
    }
    for (int o : order) {
        if (o == anchor) {
            continue;
        }
        double cost[2] = {0.0, 0.0};
        for (int s = 0; s < 2; ++s) {
            const double cand = (s == 0 ? 1.0 : -1.0) * alpha(o);
            for (int l : placed) {
                if (std::isnan(cosv(o, l))) {
                    continue;
                }
                const double diff = std::cos(cand - d(l)) - cosv(o, l);
                cost[s] += weight(o, l) * diff * diff;
            }
        }
        d(o) = (cost[1] < cost[0] ? -1.0 : 1.0) * alpha(o);
        placed.push_back(o);
    }
    return d;
}

} // namespace

std::pair<double, double> phase_chi2(const ReconstructedSubmatrix& candidate, const HomDataset& dataset,
                                     const PhaseOptions& options)
{
    check_candidate(candidate, dataset);
    const PhaseProblem pp = make_phase_problem(dataset, options);
    RealVector res(pp.n_residuals());
    phase_residuals(pp, candidate.matrix(), res);
    const auto nt = static_cast<Eigen::Index>(pp.terms.size());
    return {res.squaredNorm(), res.head(nt).squaredNorm()};
}

ReconstructedSubmatrix refine_chi2(const ReconstructedSubmatrix& candidate, const HomDataset& dataset,
                                   const PhaseOptions& options)
{
    dataset.validate();
    check_candidate(candidate, dataset);
    const PhaseProblem pp = make_phase_problem(dataset, options);
    ReconstructedSubmatrix out = candidate;
    out.converged = true;
    out.warning.clear();
    if (pp.n_params() == 0 || pp.n_residuals() < pp.n_params()) {
        const auto [total, data] = phase_chi2(candidate, dataset, options);
        out.chi2 = total;
        out.chi2_data = data;
        if (pp.n_params() > 0) {
            out.converged = false;
            out.warning = "phases under-constrained; refinement skipped";
        }
        return out;
    }
    const RealMatrix base = candidate.phases;
    auto residual = [&](const RealVector& v, RealVector& res) { phase_residuals(pp, assemble(candidate.moduli, v, base), res); };
    auto jacobian = [&](const RealVector& v, RealMatrix& jac) { phase_jacobian(pp, assemble(candidate.moduli, v, base), jac); };
    detail::LeastSquaresOptions opts;
    opts.max_evaluations = 2000;
    const auto res = detail::least_squares(residual, jacobian, free_phases(candidate.phases), pp.n_residuals(), opts);
    for (Eigen::Index r = 1; r < out.phases.rows(); ++r) {
        for (Eigen::Index o = 1; o < out.phases.cols(); ++o) {
            out.phases(r, o) = wrap_phase(res.x((r - 1) * (out.phases.cols() - 1) + (o - 1)));
        }
    }
    out.chi2 = res.cost;
    out.chi2_data = res.residuals.head(static_cast<Eigen::Index>(pp.terms.size())).squaredNorm();
    if (!res.converged) {
        out.converged = false;
        out.warning = "optimizer stagnated (" + res.status + "); returning best iterate";
    }
    return out;
}

ReconstructedSubmatrix reconstruct_phases(const HomDataset& dataset, const RealMatrix& moduli,
                                          const PhaseOptions& options)
{
    dataset.validate();
    require_connected(dataset);
    const int rows = dataset.rows();
    const int m = dataset.m;
    if (moduli.rows() != rows || moduli.cols() != m) {
        throw ConfigError("moduli table must be rows x m");
    }
    const auto rp = row_pairs(dataset);

    // Breadth-first spanning tree rooted at the reference row.
    struct Edge {
        int parent, child;
        RealVector d;
    };
    std::vector<Edge> edges;
    std::vector<bool> reached(static_cast<std::size_t>(rows), false);
    reached[0] = true;
    std::queue<int> frontier;
    frontier.push(0);
    while (!frontier.empty()) {
        const int cur = frontier.front();
        frontier.pop();
        for (const auto& pair : rp) {
            int other = -1;
            if (pair.p == cur && !reached[pair.q]) {
                other = pair.q;
            } else if (pair.q == cur && !reached[pair.p]) {
                other = pair.p;
            }
            if (other < 0) {
                continue;
            }
            reached[other] = true;
            RealVector d = chain_relative_phase(pair, moduli, m, options);
            // chain gives theta_q - theta_p; orient as child - parent.
            if (pair.p != cur) {
                d = -d;
            }
            edges.push_back({cur, other, std::move(d)});
            frontier.push(other);
        }
    }

    const std::size_t n_candidates = std::size_t{1} << edges.size();
    ReconstructedSubmatrix best;
    bool have_best = false;
    for (std::size_t mask = 0; mask < n_candidates; ++mask) {
        RealMatrix theta = RealMatrix::Zero(rows, m);
        for (std::size_t e = 0; e < edges.size(); ++e) {
            const double sign = (mask >> e) & 1U ? -1.0 : 1.0;
            theta.row(edges[e].child) = theta.row(edges[e].parent) + sign * edges[e].d.transpose();
        }
        ReconstructedSubmatrix cand;
        cand.inputs = dataset.inputs;
        cand.moduli = moduli;
        cand.phases.resize(rows, m);
        for (int r = 0; r < rows; ++r) {
            for (int o = 0; o < m; ++o) {
                cand.phases(r, o) = r == 0 ? 0.0 : wrap_phase(theta(r, o) - theta(r, 0));
            }
        }
        ReconstructedSubmatrix refined = refine_chi2(cand, dataset, options);
        if (!have_best || refined.chi2 < best.chi2) {
            best = std::move(refined);
            have_best = true;
        }
    }
    return best;
}

ReconstructedSubmatrix reconstruct(const HomDataset& dataset, const ModuliOptions& moduli_options,
                                   const PhaseOptions& phase_options)
{
    const RealMatrix moduli = reconstruct_moduli(dataset, moduli_options);
    return reconstruct_phases(dataset, moduli, phase_options);
}

GaugeDistance gauge_distance(const ReconstructedSubmatrix& a, const ComplexMatrix& reference_rows)
{
    if (a.moduli.rows() != reference_rows.rows() || a.moduli.cols() != reference_rows.cols() ||
        a.phases.rows() != a.moduli.rows() || a.phases.cols() != a.moduli.cols()) {
        throw DomainError("gauge_distance: shapes differ");
    }
    const auto rows = a.moduli.rows();
    const auto m = a.moduli.cols();
    GaugeDistance out;
    double sm = 0.0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index o = 0; o < m; ++o) {
            const double d = a.moduli(r, o) - std::abs(reference_rows(r, o));
            sm += d * d;
        }
    }
    out.moduli_rmse = std::sqrt(sm / static_cast<double>(rows * m));

    RealMatrix ref_phase(rows, m);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index o = 0; o < m; ++o) {
            ref_phase(r, o) = std::arg(reference_rows(r, o));
        }
    }
    double direct = 0.0;
    double conjugate = 0.0;
    std::size_t count = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index s = r + 1; s < rows; ++s) {
            for (Eigen::Index i = 0; i < m; ++i) {
                for (Eigen::Index j = i + 1; j < m; ++j) {
                    const double qa = a.phases(r, i) + a.phases(s, j) - a.phases(r, j) - a.phases(s, i);
                    const double qb = ref_phase(r, i) + ref_phase(s, j) - ref_phase(r, j) - ref_phase(s, i);
                    const double d1 = wrap_phase(qa - qb);
                    const double d2 = wrap_phase(-qa - qb);
                    direct += d1 * d1;
                    conjugate += d2 * d2;
                    ++count;
                }
            }
        }
    }
    if (count > 0) {
        out.phase_quadruple_rmse = std::sqrt(std::min(direct, conjugate) / static_cast<double>(count));
    }
    return out;
}

} // namespace ccbs
