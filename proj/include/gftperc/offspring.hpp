#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "gftperc/rng.hpp"

namespace gftperc {

struct SubcriticalError : std::runtime_error {
    explicit SubcriticalError(double m)
        : std::runtime_error("offspring mean " + std::to_string(m) + " is not > 1") {}
};

// Offspring distribution with finite support (named infinite families are
// truncated at k_max with the lost mass recorded as `deficit`).
class OffspringDistribution {
public:
    // pmf[k] = P[k children]; trailing zeros allowed.
    static OffspringDistribution from_pmf(std::vector<double> pmf, double deficit = 0.0);

    static OffspringDistribution deterministic(int k);
    // Poisson(lambda) truncated at k_max.
    static OffspringDistribution poisson(double lambda, int k_max);
    // Geometric on {0,1,...}: P[k] = (1-p)^k p, truncated at k_max.
    static OffspringDistribution geometric(double p, int k_max);

    // Spec strings: "det:3", "table:0=0.25,2=0.75", "poisson:1.7@kmax=64",
    // "geom:0.4@kmax=64".
    static OffspringDistribution parse(const std::string& spec);

    double pmf(int k) const { return k >= 0 && k < static_cast<int>(pmf_.size()) ? pmf_[k] : 0.0; }
    int max_k() const { return static_cast<int>(pmf_.size()) - 1; }
    double mean() const { return mean_; }
    double deficit() const { return deficit_; }

    // Generating function f(s) = sum s^k pmf(k) and its derivative.
    double gen_fn(double s) const;
    double gen_fn_derivative(double s) const;

    int sample(RngStream& rng) const;

    // Largest gamma (on a coarse grid) with sum e^{gamma k} pmf(k) finite and
    // certifiable. Finite support: any gamma works (returns +inf). Truncated
    // Poisson: all gamma (analytic). Truncated geometric(p): -log(1-p).
    double verifiable_exponential_moment() const;

    const std::vector<double>& probabilities() const { return pmf_; }

private:
    std::vector<double> pmf_;
    std::vector<double> cdf_;
    double mean_ = 0.0;
    double deficit_ = 0.0;
    enum class Family { Table, Poisson, Geometric } family_ = Family::Table;
    double family_param_ = 0.0;
};

// Extinction probability q: smallest fixed point of f on [0,1).
// Requires mean > 1 (throws SubcriticalError otherwise).
double extinction_probability(const OffspringDistribution& nu, double tol = 1e-14);

// Offspring law of the tree of infinite lines of descent:
// f_inf(s) = (f(q + s(1-q)) - q)/(1-q), pmf extracted by exact binomial
// re-expansion of the polynomial. nu_inf(0) = 0 and mean(nu_inf) = mean(nu).
OffspringDistribution conditioned_pmf(const OffspringDistribution& nu);

// Size-biased law nu_bar(k) = k nu_inf(k) / m.
OffspringDistribution size_biased(const OffspringDistribution& nu_inf);

// Truncated generating function f_{inf,M}(s) = sum_{k<=M} s^k nu_inf(k).
struct TruncatedGenFn {
    std::vector<double> coeff;  // coeff[k] = nu_inf(k), k <= M
    double operator()(double s) const;
    double derivative(double s) const;
};
TruncatedGenFn truncated_genfn(const OffspringDistribution& nu_inf, int M);

}  // namespace gftperc
