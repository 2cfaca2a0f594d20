#include "sigmort/arima.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "sigmort/errors.hpp"
#include "sigmort/format.hpp"

namespace sigmort {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxState = 3;
// tanh(6) = 0.99999
constexpr double kBoundaryU = 6.0;
constexpr double kRelTol = 1e-8;

std::vector<double> difference(std::span<const double> y, int d) {
    std::vector<double> w(y.begin(), y.end());
    for (int k = 0; k < d && !w.empty(); ++k) {
        for (std::size_t t = w.size() - 1; t >= 1; --t) w[t] -= w[t - 1];
        w.erase(w.begin());
    }
    return w;
}

bool is_constant(std::span<const double> w, double scale) {
    if (w.empty()) return true;
    const double tol = 1e-12 * std::max(1.0, scale);
    for (double v : w)
        if (std::abs(v - w.front()) > tol) return false;
    return true;
}

/// Harvey state-space form of an ARMA(p, q) with r = max(p, q + 1) <= 3.
struct StateSpace {
    int r = 1;
    double T[kMaxState][kMaxState] = {};
    double R[kMaxState] = {};
    double P0[kMaxState][kMaxState] = {};
    bool ok = true;

    StateSpace(std::span<const double> ar, std::span<const double> ma) {
        r = std::max<int>(static_cast<int>(ar.size()), static_cast<int>(ma.size()) + 1);
        for (std::size_t i = 0; i < ar.size(); ++i) T[i][0] = ar[i];
        for (int i = 0; i + 1 < r; ++i) T[i][i + 1] = 1.0;
        R[0] = 1.0;
        for (std::size_t j = 0; j < ma.size(); ++j) R[j + 1] = ma[j];
        // Stationary covariance: P = T P T' + R R'.
        using Small = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 9, 9>;
        using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 9, 1>;
        const int r2 = r * r;
        Small A = Small::Identity(r2, r2);
        SmallVec rhs(r2);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) {
                rhs(i * r + j) = R[i] * R[j];
                for (int k = 0; k < r; ++k)
                    for (int l = 0; l < r; ++l) A(i * r + j, k * r + l) -= T[i][k] * T[j][l];
            }
        const SmallVec vecP = Eigen::PartialPivLU<Small>(A).solve(rhs);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) {
                P0[i][j] = vecP(i * r + j);
                if (!std::isfinite(P0[i][j])) ok = false;
            }
    }
};

struct FilterResult {
    double sumsq = 0.0;
    double sumlogf = 0.0;
    std::size_t count = 0;
    double a_next[kMaxState] = {};  ///< predicted state for the first out-of-sample step
    bool ok = true;
};

/// Kalman filter over x - c; innovations with index < skip condition the
/// likelihood but are not scored.
FilterResult kalman_filter(const StateSpace& ss, std::span<const double> x, double c, std::size_t skip) {
    FilterResult out;
    const int r = ss.r;
    double a[kMaxState] = {};
    double P[kMaxState][kMaxState];
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) P[i][j] = ss.P0[i][j];
    for (std::size_t t = 0; t < x.size(); ++t) {
        const double v = x[t] - c - a[0];
        const double F = P[0][0];
        if (!(F > 0.0) || !std::isfinite(F)) {
            out.ok = false;
            return out;
        }
        if (t >= skip) {
            out.sumsq += v * v / F;
            out.sumlogf += std::log(F);
            ++out.count;
        }
        // Update.
        double au[kMaxState], Pu[kMaxState][kMaxState];
        for (int i = 0; i < r; ++i) au[i] = a[i] + P[i][0] * v / F;
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) Pu[i][j] = P[i][j] - P[i][0] * P[0][j] / F;
        // Predict.
        double TP[kMaxState][kMaxState];
        for (int i = 0; i < r; ++i) {
            a[i] = 0.0;
            for (int k = 0; k < r; ++k) a[i] += ss.T[i][k] * au[k];
        }
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) {
                TP[i][j] = 0.0;
                for (int k = 0; k < r; ++k) TP[i][j] += ss.T[i][k] * Pu[k][j];
            }
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) {
                double s = ss.R[i] * ss.R[j];
                for (int k = 0; k < r; ++k) s += TP[i][k] * ss.T[j][k];
                P[i][j] = s;
            }
    }
    for (int i = 0; i < r; ++i) out.a_next[i] = a[i];
    return out;
}

/// Durbin-Levinson map from unconstrained values to AR coefficients, n <= 2.
void pacf_transform(const double* u, int n, double* phi) {
    if (n >= 1) phi[0] = std::tanh(u[0]);
    if (n == 2) {
        const double r = std::tanh(u[1]);
        phi[0] -= r * phi[0];
        phi[1] = r;
    }
}

struct Candidate {
    std::span<const double> w;  // differenced series
    int p, q;
    bool drift;
    std::size_t skip;

    std::size_t dim() const { return static_cast<std::size_t>(p + q + (drift ? 1 : 0)); }

    void unpack(const double* u, std::vector<double>& ar, std::vector<double>& ma, double& c) const {
        double a[2], m[2];
        c = unpack(u, a, m);
        ar.assign(a, a + p);
        ma.assign(m, m + q);
    }

    double unpack(const double* u, double* ar, double* ma) const {
        pacf_transform(u, p, ar);
        // 1 + theta(B) invertible <=> 1 - (-theta)(B) stationary.
        pacf_transform(u + p, q, ma);
        for (int j = 0; j < q; ++j) ma[j] = -ma[j];
        return drift ? u[p + q] : 0.0;
    }

    double neg_loglik(const double* u, double* sigma2 = nullptr, std::size_t* count = nullptr) const {
        double ar[2], ma[2];
        const double c = unpack(u, ar, ma);
        const StateSpace ss({ar, static_cast<std::size_t>(p)}, {ma, static_cast<std::size_t>(q)});
        if (!ss.ok) return kInf;
        const FilterResult f = kalman_filter(ss, w, c, skip);
        if (!f.ok || f.count == 0) return kInf;
        const double s2 = f.sumsq / static_cast<double>(f.count);
        if (!(s2 > 0.0)) return kInf;
        if (sigma2) *sigma2 = s2;
        if (count) *count = f.count;
        const double n = static_cast<double>(f.count);
        return 0.5 * (n * (std::log(2.0 * std::numbers::pi * s2) + 1.0) + f.sumlogf);
    }

    double css(const double* u) const {
        double ar[2], ma[2];
        const double c = unpack(u, ar, ma);
        double e[2] = {0.0, 0.0};  // e[0] = e_{t-1}, e[1] = e_{t-2}
        double sum = 0.0;
        for (std::size_t t = static_cast<std::size_t>(p); t < w.size(); ++t) {
            double v = w[t] - c;
            for (int i = 0; i < p; ++i) v -= ar[i] * (w[t - 1 - i] - c);
            for (int j = 0; j < q; ++j) v -= ma[j] * e[j];
            e[1] = e[0];
            e[0] = v;
            sum += v * v;
        }
        return sum;
    }
};

struct Objective {
    const Candidate* cand;
    bool use_css;
    std::size_t transformed() const { return static_cast<std::size_t>(cand->p + cand->q); }
    double eval(const double* u) const { return use_css ? cand->css(u) : cand->neg_loglik(u); }
};

double gsl_f(const gsl_vector* x, void* params) {
    const auto* obj = static_cast<const Objective*>(params);
    const double v = obj->eval(x->data);
    return std::isfinite(v) ? v : 1e300;
}

void gsl_df(const gsl_vector* x, void* params, gsl_vector* g) {
    const auto* obj = static_cast<const Objective*>(params);
    const std::size_t n = x->size;
    std::vector<double> u(x->data, x->data + n);
    for (std::size_t i = 0; i < n; ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(u[i]));
        const double keep = u[i];
        u[i] = keep + h;
        const double fp = obj->eval(u.data());
        u[i] = keep - h;
        const double fm = obj->eval(u.data());
        u[i] = keep;
        const double gi = (fp - fm) / (2.0 * h);
        gsl_vector_set(g, i, std::isfinite(gi) ? gi : 0.0);
    }
}

void gsl_fdf(const gsl_vector* x, void* params, double* f, gsl_vector* g) {
    *f = gsl_f(x, params);
    gsl_df(x, params, g);
}

/// BFGS from `start`; returns false when it fails to converge.
bool minimize(const Objective& obj, std::vector<double>& u, const ArimaOptions& opts) {
    const std::size_t n = u.size();
    if (n == 0) return std::isfinite(obj.eval(u.data()));
    gsl_multimin_function_fdf fn{&gsl_f, &gsl_df, &gsl_fdf, n, const_cast<Objective*>(&obj)};
    gsl_vector* x = gsl_vector_alloc(n);
    for (std::size_t i = 0; i < n; ++i) gsl_vector_set(x, i, u[i]);
    gsl_multimin_fdfminimizer* s = gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, n);
    gsl_multimin_fdfminimizer_set(s, &fn, x, 0.1, 0.1);
    bool converged = false;
    double previous = gsl_multimin_fdfminimizer_minimum(s);
    for (int iter = 0; iter < opts.max_iter; ++iter) {
        const int status = gsl_multimin_fdfminimizer_iterate(s);
        const gsl_vector* dx = gsl_multimin_fdfminimizer_dx(s);
        const gsl_vector* g = gsl_multimin_fdfminimizer_gradient(s);
        const double fval = gsl_multimin_fdfminimizer_minimum(s);
        const double gmax = gsl_vector_max(g) > -gsl_vector_min(g) ? gsl_vector_max(g) : -gsl_vector_min(g);
        if (status == GSL_ENOPROG) {
            // No further descent is possible at working precision.
            converged = gmax <= 1e-4 * std::max(1.0, std::abs(fval));
            break;
        }
        if (status != GSL_SUCCESS) break;
        // A partial autocorrelation this close to +-1 means the fit is running
        // onto the stationarity or invertibility boundary; such an optimum
        // is not attained, and its roots would fail the margin anyway.
        const gsl_vector* at = gsl_multimin_fdfminimizer_x(s);
        bool escaping = false;
        for (std::size_t i = 0; i < obj.transformed(); ++i) escaping |= std::abs(gsl_vector_get(at, i)) > kBoundaryU;
        if (escaping) break;
        double step = 0.0;
        for (std::size_t i = 0; i < n; ++i) step = std::max(step, std::abs(gsl_vector_get(dx, i)));
        // Relative objective change as in the usual reltol rule for BFGS.
        const bool flat = std::abs(previous - fval) < kRelTol * (std::abs(fval) + kRelTol);
        if (step < opts.param_tol || flat || gmax < 1e-7 * std::max(1.0, std::abs(fval))) {
            converged = true;
            break;
        }
        previous = fval;
    }
    const gsl_vector* best = gsl_multimin_fdfminimizer_x(s);
    for (std::size_t i = 0; i < n; ++i) u[i] = gsl_vector_get(best, i);
    converged = converged && std::isfinite(gsl_multimin_fdfminimizer_minimum(s)) &&
                gsl_multimin_fdfminimizer_minimum(s) < 1e299;
    gsl_multimin_fdfminimizer_free(s);
    gsl_vector_free(x);
    return converged;
}

void silence_gsl() {
    static std::once_flag once;
    std::call_once(once, [] { gsl_set_error_handler_off(); });
}

double aicc(double loglik, std::size_t k, std::size_t n) {
    const double kk = static_cast<double>(k);
    const double nn = static_cast<double>(n);
    if (nn - kk - 1.0 <= 0.0) return kInf;
    return -2.0 * loglik + 2.0 * kk + 2.0 * kk * (kk + 1.0) / (nn - kk - 1.0);
}

ArimaModel random_walk_with_drift(std::span<const double> y, const std::string& why) {
    ArimaModel m;
    m.d = 1;
    m.drift = true;
    m.n = y.size();
    const std::vector<double> w = difference(y, 1);
    m.constant = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
    double ss = 0.0;
    for (double v : w) ss += (v - m.constant) * (v - m.constant);
    m.sigma2 = ss / static_cast<double>(w.size());
    m.n_eff = w.size();
    m.degenerate = m.sigma2 == 0.0;
    if (!why.empty()) m.warnings.push_back(why);
    return m;
}

}  // namespace

std::string ArimaModel::describe() const {
    std::ostringstream ss;
    ss << "ARIMA(" << p << "," << d << "," << q << ")" << (drift ? (d == 0 ? " with mean" : " with drift") : "");
    ss << " ar=[";
    for (std::size_t i = 0; i < ar.size(); ++i) ss << (i ? "," : "") << format_double(ar[i]);
    ss << "] ma=[";
    for (std::size_t i = 0; i < ma.size(); ++i) ss << (i ? "," : "") << format_double(ma[i]);
    ss << "] c=" << format_double(constant) << " sigma2=" << format_double(sigma2) << " aicc=" << format_double(aicc);
    return ss.str();
}

std::vector<double> pacf_to_ar(std::span<const double> u) {
    std::vector<double> phi;
    for (std::size_t k = 0; k < u.size(); ++k) {
        const double r = std::tanh(u[k]);
        std::vector<double> next(k + 1);
        for (std::size_t j = 0; j < k; ++j) next[j] = phi[j] - r * phi[k - 1 - j];
        next[k] = r;
        phi = std::move(next);
    }
    return phi;
}

bool roots_outside_unit_circle(std::span<const double> coef, double margin) {
    std::size_t p = coef.size();
    while (p > 0 && coef[p - 1] == 0.0) --p;
    if (p == 0) return true;
    // Reciprocal roots are the eigenvalues of the companion matrix.
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < p; ++i) C(0, static_cast<Eigen::Index>(i)) = coef[i];
    for (std::size_t i = 1; i < p; ++i) C(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
    const double rho = Eigen::EigenSolver<Eigen::MatrixXd>(C, false).eigenvalues().cwiseAbs().maxCoeff();
    return rho * (1.0 + margin) < 1.0;
}

std::optional<ArimaModel> estimate_arima(std::span<const double> series, int p, int d, int q, bool drift,
                                         std::size_t condition_on, const ArimaOptions& opts) {
    silence_gsl();
    if (p < 0 || q < 0 || d < 0 || p > 2 || q > 2) throw UsageError("ARIMA orders must lie in 0..2");
    if (drift && d > 1) throw UsageError("drift is only allowed for d <= 1");
    if (condition_on < static_cast<std::size_t>(d)) throw UsageError("must condition on at least d observations");
    if (series.size() <= condition_on + 2) return std::nullopt;

    const std::vector<double> w = difference(series, d);
    Candidate cand{w, p, q, drift, condition_on - static_cast<std::size_t>(d)};
    std::vector<double> u(cand.dim(), 0.0);
    if (drift) u.back() = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());

    // CSS start; its failure to converge is not fatal, only a worse start.
    if (p + q > 0) {
        std::vector<double> start = u;
        if (minimize(Objective{&cand, true}, start, opts)) {
            for (int i = 0; i < p + q; ++i) start[i] = std::clamp(start[i], -3.0, 3.0);
            u = start;
        }
    }
    if (!minimize(Objective{&cand, false}, u, opts)) return std::nullopt;

    ArimaModel m;
    m.p = p;
    m.d = d;
    m.q = q;
    m.drift = drift;
    m.n = series.size();
    cand.unpack(u.data(), m.ar, m.ma, m.constant);
    const double nll = cand.neg_loglik(u.data(), &m.sigma2, &m.n_eff);
    if (!std::isfinite(nll)) return std::nullopt;
    m.loglik = -nll;
    m.aicc = aicc(m.loglik, m.parameter_count(), m.n_eff);
    if (!std::isfinite(m.aicc)) return std::nullopt;
    std::vector<double> neg_ma(m.ma.size());
    for (std::size_t j = 0; j < m.ma.size(); ++j) neg_ma[j] = -m.ma[j];
    if (!roots_outside_unit_circle(m.ar, opts.root_margin) || !roots_outside_unit_circle(neg_ma, opts.root_margin))
        return std::nullopt;
    return m;
}

ArimaModel fit_arima(std::span<const double> series, const ArimaOptions& opts) {
    if (series.size() < kMinArimaLength)
        throw DataError("ARIMA needs at least " + std::to_string(kMinArimaLength) + " observations, got " +
                        std::to_string(series.size()));
    for (double v : series)
        if (!std::isfinite(v)) throw DataError("non-finite value in ARIMA input");
    double scale = 0.0;
    for (double v : series) scale = std::max(scale, std::abs(v));

    if (is_constant(series, scale)) {
        ArimaModel m;
        m.n = series.size();
        m.constant = series.front();
        m.degenerate = true;
        m.warnings.push_back("constant series; using the trivial model");
        return m;
    }
    if (opts.max_d >= 1 && opts.allow_drift && is_constant(difference(series, 1), scale)) {
        ArimaModel m = random_walk_with_drift(series, "");
        m.warnings.push_back("constant first differences; using an exact random walk with drift");
        return m;
    }

    const auto condition_on = static_cast<std::size_t>(opts.max_d);
    std::optional<ArimaModel> best;
    auto better = [](const ArimaModel& a, const ArimaModel& b) {
        if (std::abs(a.aicc - b.aicc) > 1e-6) return a.aicc < b.aicc;
        const int ca = a.p + a.q + a.d, cb = b.p + b.q + b.d;
        if (ca != cb) return ca < cb;
        return a.d < b.d;
    };
    for (int d = 0; d <= opts.max_d; ++d) {
        for (int p = 0; p <= opts.max_p; ++p) {
            for (int q = 0; q <= opts.max_q; ++q) {
                for (int drift = 0; drift <= 1; ++drift) {
                    if (drift && (!opts.allow_drift || d > 1)) continue;
                    auto m = estimate_arima(series, p, d, q, drift != 0, condition_on, opts);
                    if (m && (!best || better(*m, *best))) best = std::move(m);
                }
            }
        }
    }
    if (!best) return random_walk_with_drift(series, "no ARIMA candidate converged; using random walk with drift");
    return *best;
}

std::vector<double> forecast_arima(const ArimaModel& model, std::span<const double> series, std::size_t h) {
    if (h < 1) throw DataError("forecast horizon must be at least 1");
    if (series.size() <= static_cast<std::size_t>(model.d)) throw DataError("series too short to forecast");

    // Forecasts of the differenced series.
    std::vector<double> wf(h, model.constant);
    if (!model.degenerate && (model.p > 0 || model.q > 0)) {
        const std::vector<double> w = difference(series, model.d);
        const StateSpace ss(model.ar, model.ma);
        if (!ss.ok) throw NumericError("ARMA stationary covariance is not finite");
        const FilterResult f = kalman_filter(ss, w, model.constant, 0);
        if (!f.ok) throw NumericError("Kalman filter failed while forecasting");
        double a[kMaxState];
        std::copy(f.a_next, f.a_next + kMaxState, a);
        for (std::size_t j = 0; j < h; ++j) {
            wf[j] = model.constant + a[0];
            double next[kMaxState] = {};
            for (int i = 0; i < ss.r; ++i)
                for (int k = 0; k < ss.r; ++k) next[i] += ss.T[i][k] * a[k];
            std::copy(next, next + kMaxState, a);
        }
    }

    // Undo the differencing, innermost level first.
    std::vector<double> out = wf;
    for (int level = model.d; level >= 1; --level) {
        const std::vector<double> base = difference(series, level - 1);
        double last = base.back();
        for (double& v : out) {
            last += v;
            v = last;
        }
    }
    return out;
}

}  // namespace sigmort
