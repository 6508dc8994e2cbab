#include "gftperc/spectral.hpp"

#include <algorithm>
#include <cmath>

#include "gftperc/q_recursion.hpp"

namespace gftperc {

namespace {

double phi_bar(double t) { return 0.5 * std::erfc(t * 0.7071067811865475244); }

// Composite Gauss-Legendre panels over [-L, L] with a panel edge at the cut
// (clamped into the window), so the indicator is constant on every panel.
void cut_aligned_panels(double h, double sigma, int node_count, std::vector<double>& nodes,
                        std::vector<double>& weights) {
    const double L = 10.0 * sigma;
    const double cut = std::clamp(h, -L, L);
    const int panels = std::max(4, node_count / 16);
    const int per_panel = std::max(4, node_count / panels);
    const Quadrature gl = Quadrature::gauss_hermite(per_panel);  // for its GL rule

    std::vector<double> edges;
    const double below = cut + L;   // width of [-L, cut]
    const double above = L - cut;   // width of [cut, L]
    const int below_panels = std::max(1, static_cast<int>(std::lround(panels * below / (2 * L))));
    const int above_panels = std::max(1, panels - below_panels);
    for (int i = 0; i <= below_panels; ++i)
        edges.push_back(-L + below * i / below_panels);
    for (int i = 1; i <= above_panels; ++i)
        edges.push_back(cut + above * i / above_panels);

    nodes.clear();
    weights.clear();
    const double inv_norm = 1.0 / (sigma * std::sqrt(2.0 * 3.141592653589793238463));
    for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
        const double mid = 0.5 * (edges[e] + edges[e + 1]);
        const double half = 0.5 * (edges[e + 1] - edges[e]);
        if (half <= 0.0) continue;
        for (std::size_t j = 0; j < gl.gl_nodes.size(); ++j) {
            const double a = mid + half * gl.gl_nodes[j];
            const double w =
                half * gl.gl_weights[j] * inv_norm * std::exp(-0.5 * a * a / (sigma * sigma));
            nodes.push_back(a);
            weights.push_back(w);
        }
    }
}

}  // namespace

SpectralOperator build_operator(double alpha_bar, double h, int node_count) {
    if (!(alpha_bar > 0.0 && alpha_bar < 1.0))
        throw std::invalid_argument("alpha_bar must be in (0,1)");
    SpectralOperator op;
    op.alpha_bar = alpha_bar;
    op.sigma_sq = alpha_bar / (1.0 - alpha_bar * alpha_bar);
    op.h = h;
    const double sigma = std::sqrt(op.sigma_sq);
    cut_aligned_panels(h, sigma, node_count, op.nodes, op.weights);

    const int n = op.size();
    op.matrix.assign(static_cast<std::size_t>(n) * n, 0.0);
    // k(a,b) = (sigma/sqrt(alpha)) exp(ab - alpha(a^2+b^2)/2) relative to
    // nu_bar; the sqrt(w_i w_j) similarity keeps the matrix symmetric.
    const double pref = sigma / std::sqrt(alpha_bar);
    std::vector<double> sqw(n);
    for (int i = 0; i < n; ++i) sqw[i] = std::sqrt(op.weights[i]);
    for (int i = 0; i < n; ++i) {
        if (op.nodes[i] < h) continue;
        const double ai = op.nodes[i];
        for (int j = i; j < n; ++j) {
            if (op.nodes[j] < h) continue;
            const double aj = op.nodes[j];
            const double k =
                pref * std::exp(ai * aj - 0.5 * alpha_bar * (ai * ai + aj * aj));
            const double entry = 2.0 * k * sqw[i] * sqw[j];
            op.matrix[static_cast<std::size_t>(i) * n + j] = entry;
            op.matrix[static_cast<std::size_t>(j) * n + i] = entry;
        }
    }
    return op;
}

double top_eigenvalue(const SpectralOperator& op, int max_iters) {
    const int n = op.size();
    std::vector<double> v(n, 1.0), w(n, 0.0);
    // Start from the Perron cone: the matrix is entrywise nonnegative.
    double lambda = 0.0;
    for (int iter = 0; iter < max_iters; ++iter) {
        double norm = 0.0;
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            const double* row = op.matrix.data() + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) acc += row[j] * v[j];
            w[i] = acc;
            norm += acc * acc;
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) return 0.0;  // h beyond the window: zero operator
        double dot = 0.0;
        for (int i = 0; i < n; ++i) {
            w[i] /= norm;
            dot += w[i] * v[i];
        }
        const double next = norm * dot;  // Rayleigh quotient of the previous iterate
        std::swap(v, w);
        if (iter > 2 && std::abs(next - lambda) <= 1e-10 * std::max(1.0, std::abs(next)))
            return next;
        lambda = next;
    }
    throw NoConvergenceError("power iteration did not converge");
}

LambdaCurve lambda_curve_and_root(double alpha_bar, double h_min, double h_max, int h_steps,
                                  double tol, int node_count) {
    LambdaCurve curve;
    const auto lam = [&](double h) { return top_eigenvalue(build_operator(alpha_bar, h, node_count)); };
    for (int i = 0; i <= h_steps; ++i) {
        const double h = h_min + (h_max - h_min) * i / h_steps;
        curve.h_values.push_back(h);
        curve.lambda_values.push_back(lam(h));
    }
    if (!(curve.lambda_values.front() > 1.0 && curve.lambda_values.back() < 1.0))
        throw RangeDoesNotBracketError("lambda = 1 not bracketed by the h range");
    double lo = h_min, hi = h_max;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (lam(mid) > 1.0 ? lo : hi) = mid;
    }
    curve.h_root = 0.5 * (lo + hi);
    return curve;
}

SpectralCertificate binary_subtree_certificate(int M, double margin, double h_grid_step,
                                               int node_count) {
    if (M < 2) throw std::invalid_argument("M must be >= 2");
    SpectralCertificate cert;
    cert.M = M;
    cert.alpha_bar = 1.0 / (M + 1.0);
    cert.margin = margin;
    const auto lam = [&](double h) {
        return top_eigenvalue(build_operator(cert.alpha_bar, h, node_count));
    };
    if (lam(0.0) < 1.0 + margin) {
        cert.h_cert = 0.0;
        cert.lambda_at_h = lam(0.0);
        return cert;
    }
    // lambda is decreasing in h: walk the grid up while the margin holds.
    double h = 0.0;
    double step = 256 * h_grid_step;
    while (step >= h_grid_step - 1e-15) {
        while (lam(h + step) >= 1.0 + margin) h += step;
        step *= 0.5;
    }
    cert.h_cert = h;
    cert.lambda_at_h = lam(h);
    return cert;
}

Theorem58Result theorem58_certificate(const OffspringDistribution& nu_inf, const LEstimator& L,
                                      double h_grid_step) {
    if (nu_inf.mean() <= 2.0) throw MeanNotAboveTwoError(nu_inf.mean());
    Theorem58Result res;

    // Smallest M with f'_{inf,M}(1) > 2.
    int M = -1;
    for (int candidate = 1; candidate <= nu_inf.max_k(); ++candidate) {
        if (truncated_genfn(nu_inf, candidate).derivative(1.0) > 2.0) {
            M = candidate;
            break;
        }
    }
    if (M < 0) {
        res.binding_constraint = "no truncation level M with f'_{inf,M}(1) > 2";
        return res;
    }
    const TruncatedGenFn f_M = truncated_genfn(nu_inf, M);
    const double m_prime = 0.5 * (2.0 + f_M.derivative(1.0));
    // s0: smallest s with f'_{inf,M}(s) >= m' (f' is increasing).
    double lo = 0.0, hi = 1.0;
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        (f_M.derivative(mid) >= m_prime ? hi : lo) = mid;
    }
    const double s0 = hi;

    res.M = M;
    res.m_prime = m_prime;
    res.s0 = s0;

    const auto cond1 = [&](double h) {
        return std::exp(-0.5 * h * h) * phi_bar(std::sqrt(M + 1.0) * h) > 1.0 / m_prime;
    };
    const auto cond2 = [&](double h) {
        const LBracket b = L.at(0.5 * h * h);
        return b.low - 4.0 * b.se >= 0.5 * (1.0 + s0);
    };

    if (!cond1(h_grid_step) || !cond2(h_grid_step)) {
        res.binding_constraint = !cond1(h_grid_step)
                                     ? "Gaussian-tail inequality fails at the first grid point"
                                     : "L(h^2/2) inequality fails at the first grid point";
        return res;
    }
    // Both conditions are decreasing in h: walk the grid up.
    double h = h_grid_step;
    double step = 256 * h_grid_step;
    while (step >= h_grid_step - 1e-15) {
        while (cond1(h + step) && cond2(h + step)) h += step;
        step *= 0.5;
    }
    res.feasible = true;
    res.h_cert = h;
    return res;
}

}  // namespace gftperc
