#include "cvqkd/security.hpp"

#include <cmath>
#include <sstream>

namespace cvqkd {

namespace {
std::string describe(const SecurityParams& p) {
    std::ostringstream os;
    os.precision(10);
    os << "V_A=" << p.V_A << " T=" << p.T << " xi=" << p.xi << " eta=" << p.eta << " v_el=" << p.v_el
       << " detection=" << (p.detection == Detection::heterodyne ? "heterodyne" : "homodyne");
    return os.str();
}

// Symplectic pair from the trace-like invariant s and determinant-like d:
// lambda^2 = (s +- sqrt(s^2 - 4d)) / 2.
std::array<double, 2> pair_from(double s, double d, const SecurityParams& p) {
    double disc = s * s - 4.0 * d;
    if (disc < -1e-9 * std::max(1.0, s * s))
        throw NumericalDomainError("security", "negative discriminant for " + describe(p));
    // A double root leaves only rounding in disc; its sqrt would be ~1e-8.
    if (disc < 1e-12 * s * s) disc = 0.0;
    const double r = std::sqrt(disc);
    const double l1 = 0.5 * (s + r);
    const double l2 = l1 > 0.0 ? d / l1 : 0.0;  // product form avoids cancellation
    if (l2 < 0.0) throw NumericalDomainError("security", "negative squared eigenvalue for " + describe(p));
    return {std::sqrt(l1), std::sqrt(l2)};
}
}  // namespace

void SecurityParams::validate() const {
    auto bad = [](const std::string& what) { throw ParameterError("security", what); };
    if (!(V_A >= 0.0) || !std::isfinite(V_A)) bad("V_A must be >= 0");
    if (!(T > 0.0 && T <= 1.0)) bad("T must lie in (0, 1]");
    if (!(xi >= 0.0) || !std::isfinite(xi)) bad("xi must be >= 0");
    if (!(eta > 0.0 && eta <= 1.0)) bad("eta must lie in (0, 1]");
    if (!(v_el >= 0.0) || !std::isfinite(v_el)) bad("v_el must be >= 0");
    if (!(beta >= 0.0 && beta <= 1.0)) bad("beta must lie in [0, 1]");
    if (!(R_s > 0.0) || !std::isfinite(R_s)) bad("R_s must be > 0");
}

double g_func(double x) {
    if (x < -1e-9) throw NumericalDomainError("security", "g_func argument " + std::to_string(x) + " < 0");
    if (x <= 0.0) return 0.0;
    return (x + 1.0) * std::log2(x + 1.0) - x * std::log2(x);
}

NoiseTerms noise_terms(const SecurityParams& p) {
    NoiseTerms n{};
    n.V = p.V_A + 1.0;
    n.chi_line = 1.0 / p.T - 1.0 + p.xi;
    n.chi_det = p.detection == Detection::heterodyne ? (2.0 - p.eta + 2.0 * p.v_el) / p.eta
                                                     : (1.0 - p.eta + p.v_el) / p.eta;
    n.chi_tot = n.chi_line + n.chi_det / p.T;
    return n;
}

HolevoResult holevo_bound(const SecurityParams& p) {
    p.validate();
    const auto [V, cl, ch, ct] = noise_terms(p);
    const double T = p.T;
    const double A = V * V * (1.0 - 2.0 * T) + 2.0 * T + T * T * (V + cl) * (V + cl);
    const double B = T * T * (V * cl + 1.0) * (V * cl + 1.0);
    const double sB = std::sqrt(B);
    const double den = T * (V + ct);

    double C = 0.0, D = 0.0;
    if (p.detection == Detection::heterodyne) {
        C = (A * ch * ch + B + 1.0 + 2.0 * ch * (V * sB + T * (V + cl)) + 2.0 * T * (V * V - 1.0)) / (den * den);
        const double q = (V + sB * ch) / den;
        D = q * q;
    } else {
        C = (V * sB + T * (V + cl) + A * ch) / den;
        D = sB * (V + sB * ch) / den;
    }

    HolevoResult r;
    const auto ab = pair_from(A, B, p);
    const auto cond = pair_from(C, D, p);
    r.lambda = {ab[0], ab[1], cond[0], cond[1]};
    for (double l : r.lambda)
        if (!(l >= 1.0 - 1e-9))
            throw NumericalDomainError("security", "symplectic eigenvalue " + std::to_string(l) + " < 1 for " +
                                                       describe(p));
    auto term = [](double l) { return g_func(std::max(0.0, 0.5 * (l - 1.0))); };
    r.chi_EB = term(r.lambda[0]) + term(r.lambda[1]) - term(r.lambda[2]) - term(r.lambda[3]);
    return r;
}

double mutual_information(const SecurityParams& p) {
    p.validate();
    const auto n = noise_terms(p);
    const double full = std::log2((n.V + n.chi_tot) / (1.0 + n.chi_tot));
    return p.detection == Detection::heterodyne ? full : 0.5 * full;
}

KeyRateReport skr(const SecurityParams& p) {
    KeyRateReport r;
    r.I_AB = mutual_information(p);
    const auto h = holevo_bound(p);
    r.chi_EB = h.chi_EB;
    r.lambda = h.lambda;
    r.skr_per_symbol = p.beta * r.I_AB - r.chi_EB;
    r.skr_bps = p.R_s * r.skr_per_symbol;
    return r;
}

double null_threshold(SecurityParams p) {
    auto rate = [&](double xi) {
        p.xi = xi;
        return skr(p).skr_per_symbol;
    };
    double lo = 0.0, hi = 1.0;
    if (!(rate(lo) > 0.0)) throw ProcessingError("security", "no threshold: key rate not positive at xi = 0");
    if (rate(hi) > 0.0) throw ProcessingError("security", "no threshold: key rate still positive at xi = 1");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double r = rate(mid);
        if (r > 0.0)
            lo = mid;
        else
            hi = mid;
        if (std::abs(r) < 1e-6 && hi - lo < 1e-12) break;
    }
    return 0.5 * (lo + hi);
}

}  // namespace cvqkd
