#include "tensorclust/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "tensorclust/error.hpp"

namespace tensorclust::sim {

namespace {

constexpr std::uint64_t kModelStream = 0x6d6f64656cULL;   // "model"
constexpr std::uint64_t kSampleStream = 0x73616d706cULL;  // "sampl"

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix(splitmix(seed) ^ splitmix(stream + 0x2545f4914f6cdd1dULL));
}

Matrix ar_matrix(std::size_t p, double rho) {
    if (!(std::abs(rho) < 1.0)) throw ConfigError("AR correlation must satisfy |rho| < 1");
    const auto n = static_cast<Eigen::Index>(p);
    Matrix out(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) out(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
    return out;
}

Matrix cs_matrix(std::size_t p, double rho) {
    const double lower = p > 1 ? -1.0 / static_cast<double>(p - 1) : -1.0;
    if (!(rho > lower && rho < 1.0)) throw ConfigError("CS correlation outside the positive-definite range");
    const auto n = static_cast<Eigen::Index>(p);
    Matrix out = Matrix::Constant(n, n, rho);
    out.diagonal().setOnes();
    return out;
}

SparsePrecisionDraw sparse_precision_draw(std::size_t p, Rng& rng) {
    const auto n = static_cast<Eigen::Index>(p);
    std::bernoulli_distribution keep(0.05);
    std::bernoulli_distribution negative(0.5);
    std::uniform_real_distribution<double> magnitude(0.5, 1.0);
    SparsePrecisionDraw out;
    out.mask = Matrix::Zero(n, n);
    Matrix omega0 = Matrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) {
            const bool on = keep(rng);
            const double u = (negative(rng) ? -1.0 : 1.0) * magnitude(rng);
            if (on) {
                out.mask(i, j) = 1.0;
                omega0(i, j) = u;
            }
        }
    Matrix omega = 0.5 * (omega0 + omega0.transpose());
    const double shift = std::max(-min_eigenvalue(omega), 0.0) + 0.05;
    omega.diagonal().array() += shift;
    const Vector scale = omega.diagonal().cwiseSqrt().cwiseInverse();
    omega = scale.asDiagonal() * omega * scale.asDiagonal();
    omega = 0.5 * (omega + omega.transpose());
    omega.diagonal().setOnes();
    out.omega = omega;
    out.sigma = SpdFactor(omega).inverse();
    out.sigma = 0.5 * (out.sigma + out.sigma.transpose());
    return out;
}

Matrix sparse_precision_sigma(std::size_t p, Rng& rng) { return sparse_precision_draw(p, rng).sigma; }

Matrix random_orthogonal(std::size_t p, Rng& rng) {
    const auto n = static_cast<Eigen::Index>(p);
    std::normal_distribution<double> normal;
    Matrix g(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) g(i, j) = normal(rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(n, n);
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < n; ++j)
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
    return q;
}

Matrix envelope_block_sigma(std::size_t p, std::size_t u, Rng& rng) {
    if (u < 1 || u > p) throw ConfigError("envelope block size must lie in [1, p]");
    const auto n = static_cast<Eigen::Index>(p);
    const auto nu = static_cast<Eigen::Index>(u);
    Matrix out = Matrix::Zero(n, n);

    Vector d1(nu);
    for (Eigen::Index i = 0; i < nu; ++i) d1[i] = 5.0 * static_cast<double>(i + 1);
    const Matrix o1 = random_orthogonal(u, rng);
    out.topLeftCorner(nu, nu) = o1 * d1.asDiagonal() * o1.transpose();

    if (nu < n) {
        const Eigen::Index nv = n - nu;
        Vector d2(nv);
        for (Eigen::Index v = 0; v < nv; ++v) d2[v] = 2.0 * std::log(static_cast<double>(v + 2));
        const Matrix o2 = random_orthogonal(static_cast<std::size_t>(nv), rng);
        out.bottomRightCorner(nv, nv) = o2 * d2.asDiagonal() * o2.transpose();
    }
    out = 0.5 * (out + out.transpose());
    return out / out.norm();
}

TnSampler::TnSampler(Tensor mu, const std::vector<Matrix>& sigmas) : mu_(std::move(mu)) {
    if (sigmas.size() != mu_.order()) throw DimensionError("sampler: wrong number of covariances");
    for (std::size_t m = 0; m < sigmas.size(); ++m) {
        if (static_cast<std::size_t>(sigmas[m].rows()) != mu_.dim(m))
            throw DimensionError("sampler: covariance does not match mode size");
        roots_.push_back(SpdFactor(sigmas[m]).sqrt());
    }
}

Tensor TnSampler::operator()(Rng& rng) const {
    std::normal_distribution<double> normal;
    Tensor z(mu_.dims());
    for (std::size_t j = 0; j < z.size(); ++j) z[j] = normal(rng);
    return mu_ + tucker(z, roots_);
}

Tensor sample_tn(const Tensor& mu, const std::vector<Matrix>& sigmas, Rng& rng) {
    return TnSampler(mu, sigmas)(rng);
}

void validate(const SimSpec& spec) {
    if (spec.k < 1) throw ConfigError("k must be positive");
    if (spec.dims.empty()) throw ConfigError("dims must be nonempty");
    for (auto d : spec.dims)
        if (d == 0) throw ConfigError("dims entries must be positive");
    if (spec.n_per_cluster == 0) throw ConfigError("n_per_cluster must be positive");
    if (spec.covariances.size() != spec.dims.size())
        throw ConfigError("covariances must list one recipe per mode");
    if (!(spec.delta_scale > 0.0)) throw ConfigError("delta_scale must be positive");
    for (std::size_t m = 0; m < spec.covariances.size(); ++m) {
        const auto& c = spec.covariances[m];
        if ((c.kind == CovKind::ar || c.kind == CovKind::cs) && !(std::abs(c.rho) < 1.0))
            throw ConfigError("covariance " + std::to_string(m) + ": rho must lie in (-1, 1)");
        if (c.kind == CovKind::envelope && (c.block < 1 || c.block > spec.dims[m]))
            throw ConfigError("covariance " + std::to_string(m) + ": envelope block must lie in [1, p_m]");
    }
    if (spec.mean.kind == MeanKind::discriminant) {
        for (const auto& e : spec.mean.entries) {
            if (e.cluster < 1 || e.cluster >= spec.k)
                throw ConfigError("discriminant entry cluster must lie in 1..k-1 (zero-based)");
            if (e.ranges.size() != spec.dims.size()) throw ConfigError("discriminant entry needs one range per mode");
            for (std::size_t m = 0; m < e.ranges.size(); ++m)
                if (e.ranges[m].first >= e.ranges[m].second || e.ranges[m].second > spec.dims[m])
                    throw ConfigError("discriminant entry range out of bounds");
        }
    } else {
        if (spec.mean.corner.size() != spec.dims.size()) throw ConfigError("mean corner needs one size per mode");
        for (std::size_t m = 0; m < spec.dims.size(); ++m)
            if (spec.mean.corner[m] < 1 || spec.mean.corner[m] > spec.dims[m])
                throw ConfigError("mean corner out of bounds");
    }
}

namespace {

BoxEntry leading_box(int cluster, std::size_t rows, double value) {
    return {cluster, {{0, rows}, {0, 1}, {0, 1}}, value};
}

void fill_box(Tensor& t, const std::vector<std::pair<std::size_t, std::size_t>>& ranges,
              const std::function<double()>& value) {
    std::vector<std::size_t> idx(ranges.size());
    for (std::size_t m = 0; m < ranges.size(); ++m) idx[m] = ranges[m].first;
    while (true) {
        t.at(idx) = value();
        std::size_t m = 0;
        for (; m < ranges.size(); ++m) {
            if (++idx[m] < ranges[m].second) break;
            idx[m] = ranges[m].first;
        }
        if (m == ranges.size()) break;
    }
}

}  // namespace

SimSpec preset(const std::string& name, std::uint64_t seed) {
    SimSpec s;
    s.name = name;
    s.seed = seed;
    s.dims = {10, 10, 4};
    s.n_per_cluster = 75;
    auto ar = [](double r) { return CovRecipe{CovKind::ar, r, 0}; };
    auto cs = [](double r) { return CovRecipe{CovKind::cs, r, 0}; };
    const CovRecipe eye{CovKind::identity, 0.0, 0};
    if (name == "M1") {
        s.k = 2;
        s.covariances = {cs(0.3), ar(0.8), cs(0.3)};
        s.mean.entries = {leading_box(1, 6, 0.5)};
    } else if (name == "M2") {
        s.k = 2;
        s.covariances = {cs(0.3), CovRecipe{CovKind::sparse_precision, 0.0, 0}, cs(0.3)};
        s.mean.entries = {leading_box(1, 6, 0.5)};
    } else if (name == "M3") {
        s.k = 3;
        s.covariances = {cs(0.3), ar(0.8), cs(0.5)};
        s.mean.entries = {leading_box(1, 6, 0.5), leading_box(2, 6, -0.5)};
    } else if (name == "M4") {
        s.k = 3;
        s.covariances = {eye, ar(0.8), eye};
        s.mean.entries = {leading_box(1, 6, 0.8), leading_box(2, 6, -0.8)};
    } else if (name == "M5") {
        s.k = 6;
        s.n_per_cluster = 50;
        s.covariances = {ar(0.9), cs(0.6), ar(0.9)};
        for (int k = 1; k < 6; ++k) s.mean.entries.push_back(leading_box(k, 6, 0.6 * k));
    } else if (name == "M6") {
        s.k = 6;
        s.n_per_cluster = 50;
        s.covariances = {CovRecipe{CovKind::envelope, 0.0, 8}, CovRecipe{CovKind::envelope, 0.0, 1},
                         CovRecipe{CovKind::envelope, 0.0, 1}};
        s.mean.kind = MeanKind::corner_uniform;
        s.mean.corner = {8, 1, 1};
    } else if (name == "M7") {
        s.k = 2;
        s.dims = {30, 30, 30};
        s.covariances = {cs(0.5), ar(0.8), cs(0.5)};
        s.mean.entries = {leading_box(1, 6, 0.6)};
    } else {
        throw ConfigError("unknown model preset '" + name + "' (expected M1..M7)");
    }
    return s;
}

std::vector<std::string> preset_names() { return {"M1", "M2", "M3", "M4", "M5", "M6", "M7"}; }

TnmmParams build_model(const SimSpec& spec) {
    validate(spec);
    Rng rng(derive_seed(spec.seed, kModelStream));
    TnmmParams params;
    for (std::size_t m = 0; m < spec.dims.size(); ++m) {
        const auto& c = spec.covariances[m];
        const std::size_t p = spec.dims[m];
        switch (c.kind) {
            case CovKind::identity: params.sigmas.push_back(Matrix::Identity(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p))); break;
            case CovKind::ar: params.sigmas.push_back(ar_matrix(p, c.rho)); break;
            case CovKind::cs: params.sigmas.push_back(cs_matrix(p, c.rho)); break;
            case CovKind::sparse_precision: params.sigmas.push_back(sparse_precision_sigma(p, rng)); break;
            case CovKind::envelope: params.sigmas.push_back(envelope_block_sigma(p, c.block, rng)); break;
        }
    }
    apply_identifiability(params.sigmas);

    const auto k_total = static_cast<std::size_t>(spec.k);
    if (spec.mean.kind == MeanKind::discriminant) {
        std::vector<Tensor> coefs(k_total, Tensor(spec.dims));
        for (const auto& e : spec.mean.entries) fill_box(coefs[static_cast<std::size_t>(e.cluster)], e.ranges, [&] { return e.value; });
        params.means.emplace_back(spec.dims);
        for (std::size_t k = 1; k < k_total; ++k) params.means.push_back(tucker(coefs[k], params.sigmas));
    } else {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::vector<std::pair<std::size_t, std::size_t>> box;
        for (auto c : spec.mean.corner) box.emplace_back(0, c);
        for (std::size_t k = 0; k < k_total; ++k) {
            Tensor mu(spec.dims);
            fill_box(mu, box, [&] { return unif(rng); });
            params.means.push_back(std::move(mu));
        }
        const Tensor base = params.means.front();
        for (auto& mu : params.means) mu -= base;
    }
    if (spec.delta_scale != 1.0) {
        const double root = std::sqrt(spec.delta_scale);
        for (std::size_t k = 1; k < k_total; ++k)
            params.means[k] = params.means[0] + root * (params.means[k] - params.means[0]);
    }
    params.pis.assign(k_total, 1.0 / static_cast<double>(k_total));
    return params;
}

LabeledDataset generate(const SimSpec& spec) {
    LabeledDataset out;
    out.truth = build_model(spec);
    Rng rng(derive_seed(spec.seed, kSampleStream));
    for (int k = 0; k < spec.k; ++k) {
        const TnSampler draw(out.truth.means[static_cast<std::size_t>(k)], out.truth.sigmas);
        for (std::size_t j = 0; j < spec.n_per_cluster; ++j) {
            out.data.push_back(draw(rng));
            out.labels.push_back(k);
        }
    }
    return out;
}

double clustering_error(std::span<const int> pred, std::span<const int> truth, int k) {
    if (pred.size() != truth.size()) throw DimensionError("label vectors differ in length");
    if (k < 1) throw ConfigError("k must be positive");
    if (k > 8) throw ConfigError("exhaustive permutation search supports at most 8 clusters");
    if (pred.empty()) return 0.0;
    const auto kk = static_cast<std::size_t>(k);
    std::vector<std::size_t> confusion(kk * kk, 0);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] < 0 || pred[i] >= k || truth[i] < 0 || truth[i] >= k)
            throw ConfigError("label outside 0..K-1");
        ++confusion[static_cast<std::size_t>(pred[i]) * kk + static_cast<std::size_t>(truth[i])];
    }
    std::vector<std::size_t> perm(kk);
    std::iota(perm.begin(), perm.end(), 0);
    std::size_t best = 0;
    do {
        std::size_t agree = 0;
        for (std::size_t a = 0; a < kk; ++a) agree += confusion[a * kk + perm[a]];
        best = std::max(best, agree);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return static_cast<double>(pred.size() - best) / static_cast<double>(pred.size());
}

}  // namespace tensorclust::sim
