#include "gftperc/offspring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace gftperc {

namespace {

void check_normalized(const std::vector<double>& pmf, double deficit) {
    double sum = deficit;
    for (double p : pmf) {
        if (p < 0.0) throw std::invalid_argument("negative probability");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("pmf sums to " + std::to_string(sum) + ", not 1");
}

}  // namespace

OffspringDistribution OffspringDistribution::from_pmf(std::vector<double> pmf, double deficit) {
    check_normalized(pmf, deficit);
    while (!pmf.empty() && pmf.back() == 0.0) pmf.pop_back();
    if (pmf.empty()) throw std::invalid_argument("empty pmf");
    OffspringDistribution d;
    d.pmf_ = std::move(pmf);
    d.deficit_ = deficit;
    d.cdf_.resize(d.pmf_.size());
    double acc = 0.0, mean = 0.0;
    for (std::size_t k = 0; k < d.pmf_.size(); ++k) {
        acc += d.pmf_[k];
        d.cdf_[k] = acc;
        mean += static_cast<double>(k) * d.pmf_[k];
    }
    d.cdf_.back() = std::max(d.cdf_.back(), 1.0);  // absorb rounding at the top
    d.mean_ = mean;
    return d;
}

OffspringDistribution OffspringDistribution::deterministic(int k) {
    std::vector<double> pmf(k + 1, 0.0);
    pmf[k] = 1.0;
    return from_pmf(std::move(pmf));
}

OffspringDistribution OffspringDistribution::poisson(double lambda, int k_max) {
    std::vector<double> pmf(k_max + 1, 0.0);
    double term = std::exp(-lambda);
    double sum = 0.0;
    for (int k = 0; k <= k_max; ++k) {
        pmf[k] = term;
        sum += term;
        term *= lambda / (k + 1);
    }
    auto d = from_pmf(std::move(pmf), 1.0 - sum);
    d.family_ = Family::Poisson;
    d.family_param_ = lambda;
    return d;
}

OffspringDistribution OffspringDistribution::geometric(double p, int k_max) {
    if (p <= 0.0 || p > 1.0) throw std::invalid_argument("geometric p must be in (0,1]");
    std::vector<double> pmf(k_max + 1, 0.0);
    double term = p;
    double sum = 0.0;
    for (int k = 0; k <= k_max; ++k) {
        pmf[k] = term;
        sum += term;
        term *= 1.0 - p;
    }
    auto d = from_pmf(std::move(pmf), 1.0 - sum);
    d.family_ = Family::Geometric;
    d.family_param_ = p;
    return d;
}

OffspringDistribution OffspringDistribution::parse(const std::string& spec) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos)
        throw std::invalid_argument("bad distribution spec '" + spec + "'");
    const std::string kind = spec.substr(0, colon);
    std::string rest = spec.substr(colon + 1);

    int k_max = 64;
    const auto at = rest.find("@kmax=");
    if (at != std::string::npos) {
        k_max = std::stoi(rest.substr(at + 6));
        rest = rest.substr(0, at);
    }

    if (kind == "det") return deterministic(std::stoi(rest));
    if (kind == "poisson") return poisson(std::stod(rest), k_max);
    if (kind == "geom") return geometric(std::stod(rest), k_max);
    if (kind == "table") {
        std::vector<double> pmf;
        std::stringstream ss(rest);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto eq = item.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("bad table entry '" + item + "'");
            const int k = std::stoi(item.substr(0, eq));
            const double p = std::stod(item.substr(eq + 1));
            if (k < 0) throw std::invalid_argument("negative k in table spec");
            if (static_cast<std::size_t>(k) >= pmf.size()) pmf.resize(k + 1, 0.0);
            pmf[k] = p;
        }
        return from_pmf(std::move(pmf));
    }
    throw std::invalid_argument("unknown distribution kind '" + kind + "'");
}

double OffspringDistribution::gen_fn(double s) const {
    // Horner, highest power first.
    double acc = 0.0;
    for (auto it = pmf_.rbegin(); it != pmf_.rend(); ++it) acc = acc * s + *it;
    return acc;
}

double OffspringDistribution::gen_fn_derivative(double s) const {
    double acc = 0.0;
    for (int k = max_k(); k >= 1; --k) acc = acc * s + static_cast<double>(k) * pmf_[k];
    return acc;
}

int OffspringDistribution::sample(RngStream& rng) const {
    const double u = rng.next_unit();
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    return static_cast<int>(it - cdf_.begin());
}

double OffspringDistribution::verifiable_exponential_moment() const {
    switch (family_) {
        case Family::Poisson: return std::numeric_limits<double>::infinity();
        case Family::Geometric: return -std::log(1.0 - family_param_);
        case Family::Table:
            return deficit_ == 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    return 0.0;
}

double extinction_probability(const OffspringDistribution& nu, double tol) {
    if (nu.mean() <= 1.0 + 1e-12) throw SubcriticalError(nu.mean());
    if (nu.pmf(0) == 0.0) return 0.0;
    // f(s) - s is positive at 0, has a single sign change on [0,1) by strict
    // convexity, and is negative just below 1 since f'(1) = m > 1.
    double lo = 0.0, hi = 1.0 - 1e-9;
    if (nu.gen_fn(hi) - hi >= 0.0)
        throw std::runtime_error("mean too close to 1 to bracket the extinction root");
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (nu.gen_fn(mid) - mid >= 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

OffspringDistribution conditioned_pmf(const OffspringDistribution& nu) {
    const double q = extinction_probability(nu);
    if (q == 0.0) {
        // nu_inf = nu restricted to k >= 1 (no mass at 0 to begin with).
        return OffspringDistribution::from_pmf(nu.probabilities(), nu.deficit());
    }
    const int K = nu.max_k();
    // Coefficient of s^j in (f(q + s(1-q)) - q)/(1-q):
    //   nu_inf(j) = sum_{k>=j} nu(k) C(k,j) q^{k-j} (1-q)^{j-1},  j >= 1.
    std::vector<double> out(K + 1, 0.0);
    for (int j = 1; j <= K; ++j) {
        double binom = 1.0;  // C(j,j)
        double qe = 1.0;     // q^{k-j}
        double acc = 0.0;
        for (int k = j; k <= K; ++k) {
            acc += nu.pmf(k) * binom * qe;
            binom *= static_cast<double>(k + 1) / static_cast<double>(k + 1 - j);
            qe *= q;
        }
        out[j] = acc * std::pow(1.0 - q, j - 1);
    }
    // Mass the truncation deficit over to the conditioned law too; for exact
    // finite support the sum below is 1 up to rounding.
    double total = 0.0;
    for (double p : out) total += p;
    return OffspringDistribution::from_pmf(std::move(out), 1.0 - total);
}

OffspringDistribution size_biased(const OffspringDistribution& nu_inf) {
    const double m = nu_inf.mean();
    std::vector<double> out(nu_inf.max_k() + 1, 0.0);
    double total = 0.0;
    for (int k = 0; k <= nu_inf.max_k(); ++k) {
        out[k] = static_cast<double>(k) * nu_inf.pmf(k) / m;
        total += out[k];
    }
    return OffspringDistribution::from_pmf(std::move(out), 1.0 - total);
}

double TruncatedGenFn::operator()(double s) const {
    double acc = 0.0;
    for (auto it = coeff.rbegin(); it != coeff.rend(); ++it) acc = acc * s + *it;
    return acc;
}

double TruncatedGenFn::derivative(double s) const {
    double acc = 0.0;
    for (int k = static_cast<int>(coeff.size()) - 1; k >= 1; --k)
        acc = acc * s + static_cast<double>(k) * coeff[k];
    return acc;
}

TruncatedGenFn truncated_genfn(const OffspringDistribution& nu_inf, int M) {
    if (M < 1) throw std::invalid_argument("M must be >= 1");
    TruncatedGenFn f;
    const int top = std::min(M, nu_inf.max_k());
    f.coeff.assign(top + 1, 0.0);
    for (int k = 0; k <= top; ++k) f.coeff[k] = nu_inf.pmf(k);
    return f;
}

}  // namespace gftperc
