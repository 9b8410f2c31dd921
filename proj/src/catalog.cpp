#include <cmath>
#include <stdexcept>

#include "odefit/catalog.hpp"

namespace odefit {

namespace {

State vec(std::initializer_list<double> v) {
    State s(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) s[i++] = x;
    return s;
}

Eigen::MatrixXd mat2(double a, double b, double c, double d) {
    Eigen::MatrixXd m(2, 2);
    m << a, b, c, d;
    return m;
}

std::vector<Interval> unit_bounds(int d) { return std::vector<Interval>(static_cast<std::size_t>(d), Interval{-1.0, 1.0}); }

// Linear planar system u' = A u + b with exact coefficients.
OdeSystem linear2(std::string name, double a11, double a12, double b1, double a21, double a22, double b2,
                  std::string description) {
    OdeSystem s;
    s.name = std::move(name);
    s.dim = 2;
    s.description = std::move(description);
    s.rhs = [=](const State& u) { return vec({a11 * u[0] + a12 * u[1] + b1, a21 * u[0] + a22 * u[1] + b2}); };
    s.jacobian = [=](const State&) { return mat2(a11, a12, a21, a22); };
    s.true_coefficients = monomial_coefficients(1, unit_bounds(2), 2,
                                                {{{0, 0}, {b1, b2}}, {{1, 0}, {a11, a21}}, {{0, 1}, {a12, a22}}});
    return s;
}

constexpr double kDuffingEps = 1e-4;

OdeSystem duffing() {
    OdeSystem s;
    s.name = "duffing";
    s.dim = 2;
    s.description = "undamped Duffing oscillator u'' + u + eps u^3 = 0";
    s.rhs = [](const State& u) { return vec({u[1], -u[0] - kDuffingEps * u[0] * u[0] * u[0]}); };
    s.jacobian = [](const State& u) { return mat2(0.0, 1.0, -1.0 - 3.0 * kDuffingEps * u[0] * u[0], 0.0); };
    s.true_coefficients =
        monomial_coefficients(3, unit_bounds(2), 2, {{{0, 1}, {1.0, 0.0}}, {{1, 0}, {0.0, -1.0}}, {{3, 0}, {0.0, -kDuffingEps}}});
    return s;
}

OdeSystem competing_species() {
    OdeSystem s;
    s.name = "competing-species";
    s.dim = 2;
    s.description = "competing species u1' = u1(1-u1-u2), u2' = u2(0.5-0.25u2-0.75u1)";
    s.rhs = [](const State& u) {
        return vec({u[0] * (1.0 - u[0] - u[1]), u[1] * (0.5 - 0.25 * u[1] - 0.75 * u[0])});
    };
    s.jacobian = [](const State& u) {
        return mat2(1.0 - 2.0 * u[0] - u[1], -u[0], -0.75 * u[1], 0.5 - 0.5 * u[1] - 0.75 * u[0]);
    };
    s.true_coefficients = monomial_coefficients(2, unit_bounds(2), 2,
                                                {{{1, 0}, {1.0, 0.0}},
                                                 {{0, 1}, {0.0, 0.5}},
                                                 {{2, 0}, {-1.0, 0.0}},
                                                 {{1, 1}, {-1.0, -0.75}},
                                                 {{0, 2}, {0.0, -0.25}}});
    return s;
}

OdeSystem limit_cycle() {
    OdeSystem s;
    s.name = "limit-cycle";
    s.dim = 2;
    s.description = "u1' = u2 - u1(u1^2+u2^2-1), u2' = -u1 - u2(u1^2+u2^2-1)";
    s.rhs = [](const State& u) {
        const double r = u[0] * u[0] + u[1] * u[1] - 1.0;
        return vec({u[1] - u[0] * r, -u[0] - u[1] * r});
    };
    s.jacobian = [](const State& u) {
        const double x = u[0], y = u[1];
        const double r = x * x + y * y - 1.0;
        return mat2(-r - 2.0 * x * x, 1.0 - 2.0 * x * y, -1.0 - 2.0 * x * y, -r - 2.0 * y * y);
    };
    s.true_coefficients = monomial_coefficients(3, unit_bounds(2), 2,
                                                {{{1, 0}, {1.0, -1.0}},
                                                 {{0, 1}, {1.0, 1.0}},
                                                 {{3, 0}, {-1.0, 0.0}},
                                                 {{2, 1}, {0.0, -1.0}},
                                                 {{1, 2}, {-1.0, 0.0}},
                                                 {{0, 3}, {0.0, -1.0}}});
    return s;
}

constexpr double kPendulumLength = 1.1;
constexpr double kPendulumDamping = 0.22;
constexpr double kGravity = 9.81;

OdeSystem pendulum() {
    OdeSystem s;
    s.name = "pendulum";
    s.dim = 2;
    s.description = "damped pendulum theta'' + (alpha/l) theta' + (g/l) sin theta = 0";
    s.rhs = [](const State& u) {
        return vec({u[1], -kGravity / kPendulumLength * std::sin(u[0]) - kPendulumDamping / kPendulumLength * u[1]});
    };
    s.jacobian = [](const State& u) {
        return mat2(0.0, 1.0, -kGravity / kPendulumLength * std::cos(u[0]), -kPendulumDamping / kPendulumLength);
    };
    return s;
}

// Nonlinear electric network.
constexpr double kNetC = 1e-9, kNetL = 1e-6, kNetU0 = 1.0, kNetG0 = -0.1, kNetGinf = 0.25;

DaeSystem network() {
    DaeSystem s;
    s.name = "network";
    s.dim_u = 2;
    s.dim_v = 2;
    s.description = "nonlinear electric network with tanh conductance";
    s.F = [](const State& u, const State& v) { return vec({v[1] / kNetC, u[0] / kNetL}); };
    s.G = [](const State& u, const State& v) {
        return vec({v[0] - (kNetG0 - kNetGinf) * kNetU0 * std::tanh(u[0] / kNetU0) - kNetGinf * u[0],
                    v[1] + u[1] + v[0]});
    };
    // Both constraint rows are explicit in v.
    s.g = [](const State& u) {
        const double v1 = (kNetG0 - kNetGinf) * kNetU0 * std::tanh(u[0] / kNetU0) + kNetGinf * u[0];
        return vec({v1, -u[1] - v1});
    };
    return s;
}

// Genetic toggle switch with a perturbed constraint v + eps sin v = u1 / (1 + [IPTG]/K)^eta.
constexpr double kTogAlpha1 = 156.25, kTogAlpha2 = 15.6, kTogBeta = 2.5, kTogGamma = 1.0, kTogEta = 2.0015;
constexpr double kTogIptg = 1e-5, kTogK = 2.9618e-5, kTogEps = 0.01;

double toggle_scale() { return std::pow(1.0 + kTogIptg / kTogK, kTogEta); }

DaeSystem toggle() {
    DaeSystem s;
    s.name = "toggle";
    s.dim_u = 2;
    s.dim_v = 1;
    s.description = "genetic toggle switch (two repressors, IPTG induction)";
    s.F = [](const State& u, const State& v) {
        return vec({kTogAlpha1 / (1.0 + std::pow(u[1], kTogBeta)) - u[0],
                    kTogAlpha2 / (1.0 + std::pow(v[0], kTogGamma)) - u[1]});
    };
    s.G = [](const State& u, const State& v) {
        return vec({v[0] + kTogEps * std::sin(v[0]) - u[0] / toggle_scale()});
    };
    s.g = [](const State& u) {
        const double w = u[0] / toggle_scale();
        const double root = safeguarded_newton([w](double x) { return x + kTogEps * std::sin(x) - w; },
                                               [](double x) { return 1.0 + kTogEps * std::cos(x); },
                                               w - kTogEps - 1e-12, w + kTogEps + 1e-12, w);
        return vec({root});
    };
    return s;
}

// Isothermal batch reactor: six mass balances, electroneutrality and three equilibria.
constexpr double kR1 = 25.1911, kR2 = 43.1042, kRm1 = 1.1904e5, kRm3 = 0.5 * kRm1, kR3 = kR1;
constexpr double kEq1 = 2.575e-2, kEq2 = 4.876, kEq3 = 1.7884e-2, kQplus = 0.0131;

// Solves electroneutrality for v1 with v2..v4 substituted from the equilibria.
double reactor_v1(const State& u) {
    auto h = [&u](double v1) {
        return kQplus - u[5] + v1 - kEq2 * u[0] / (kEq2 + v1) - kEq3 * u[2] / (kEq3 + v1) -
               kEq1 * u[4] / (kEq1 + v1);
    };
    auto dh = [&u](double v1) {
        return 1.0 + kEq2 * u[0] / ((kEq2 + v1) * (kEq2 + v1)) + kEq3 * u[2] / ((kEq3 + v1) * (kEq3 + v1)) +
               kEq1 * u[4] / ((kEq1 + v1) * (kEq1 + v1));
    };
    double lo = 0.0;
    double hi = std::max(0.0, u[5] - kQplus + std::max(0.0, u[0]) + std::max(0.0, u[2]) + std::max(0.0, u[4])) + 1e-12;
    if (h(0.0) > 0.0) {
        // Only reachable with tiny concentrations: root lies below zero.
        hi = 0.0;
        lo = -0.999 * std::min({kEq1, kEq2, kEq3});
    }
    return safeguarded_newton(h, dh, lo, hi, 0.5 * (lo + hi));
}

State reactor_v(const State& u) {
    const double v1 = reactor_v1(u);
    return vec({v1, kEq2 * u[0] / (kEq2 + v1), kEq3 * u[2] / (kEq3 + v1), kEq1 * u[4] / (kEq1 + v1)});
}

DaeSystem batch_reactor() {
    DaeSystem s;
    s.name = "batch-reactor";
    s.dim_u = 6;
    s.dim_v = 4;
    s.description = "isothermal batch reactor kinetics (mass-balance reading of the printed equations)";
    s.F = [](const State& u, const State& v) {
        const double r1 = kR1 * u[1] * u[5] - kRm1 * v[3];
        const double r2 = kR2 * u[1] * v[1];
        const double r3 = kR3 * u[3] * u[5] - kRm3 * v[2];
        return vec({-r2, -r1 - r2, r2 + r3, -r3, r1, -r1 - r3});
    };
    s.G = [](const State& u, const State& v) {
        return vec({kQplus - u[5] + v[0] - v[1] - v[2] - v[3], v[1] - kEq2 * u[0] / (kEq2 + v[0]),
                    v[2] - kEq3 * u[2] / (kEq3 + v[0]), v[3] - kEq1 * u[4] / (kEq1 + v[0])});
    };
    s.g = reactor_v;
    return s;
}

}  // namespace

double safeguarded_newton(const std::function<double(double)>& h, const std::function<double(double)>& dh, double lo,
                          double hi, double x0, double tol) {
    double flo = h(lo), fhi = h(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) throw std::domain_error("safeguarded_newton: root is not bracketed");
    double x = std::clamp(x0, lo, hi);
    for (int it = 0; it < 200; ++it) {
        const double fx = h(x);
        if (fx == 0.0) return x;
        if ((fx > 0.0) == (fhi > 0.0)) {
            hi = x;
            fhi = fx;
        } else {
            lo = x;
        }
        const double d = dh(x);
        double next = x - fx / d;
        if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= tol * std::max(1.0, std::abs(x)) || hi - lo <= tol * std::max(1.0, std::abs(x))) {
            return next;
        }
        x = next;
    }
    return x;
}

const std::vector<CatalogEntry>& catalog_entries() {
    static const std::vector<CatalogEntry> entries = {
        {"saddle", "ode", "saddle point: u1' = u1+u2-2, u2' = u1-u2", 2, 0, true, {}},
        {"improper-node", "ode", "improper node: u1' = u1-4u2, u2' = 4u1-7u2", 2, 0, true, {}},
        {"star", "ode", "star point: u1' = -u1, u2' = -u2", 2, 0, true, {}},
        {"nodal-sink", "ode", "nodal sink: u1' = -2u1+u2-2, u2' = u1-2u2+1", 2, 0, true, {}},
        {"center", "ode", "center: u1' = u1+2u2, u2' = -5u1-u2", 2, 0, true, {}},
        {"spiral", "ode", "spiral point: u1' = -u1-u2-1, u2' = 2u1-u2+5", 2, 0, true, {}},
        {"duffing", "ode", "undamped Duffing oscillator", 2, 0, true, {{"epsilon", kDuffingEps}}},
        {"competing-species", "ode", "competing species model", 2, 0, true, {}},
        {"limit-cycle", "ode", "planar system with a stable unit-circle limit cycle", 2, 0, true, {}},
        {"pendulum", "ode", "damped pendulum", 2, 0, false,
         {{"length", kPendulumLength}, {"damping", kPendulumDamping}, {"gravity", kGravity}}},
        {"network", "dae", "nonlinear electric network", 2, 2, false,
         {{"C", kNetC}, {"L", kNetL}, {"U0", kNetU0}, {"G0", kNetG0}, {"Ginf", kNetGinf}}},
        {"toggle", "dae", "genetic toggle switch", 2, 1, false,
         {{"alpha1", kTogAlpha1},
          {"alpha2", kTogAlpha2},
          {"beta", kTogBeta},
          {"gamma", kTogGamma},
          {"eta", kTogEta},
          {"IPTG", kTogIptg},
          {"K", kTogK},
          {"epsilon", kTogEps}}},
        {"batch-reactor", "dae", "isothermal batch reactor", 6, 4, false,
         {{"k1", kR1},
          {"k2", kR2},
          {"k3", kR3},
          {"k_minus1", kRm1},
          {"k_minus3", kRm3},
          {"K1", kEq1},
          {"K2", kEq2},
          {"K3", kEq3},
          {"Qplus", kQplus}}},
    };
    return entries;
}

std::vector<std::string> builtin_names() {
    std::vector<std::string> out;
    for (const auto& e : catalog_entries()) out.push_back(e.name);
    return out;
}

System builtin_system(const std::string& name) {
    if (name == "saddle") return linear2("saddle", 1, 1, -2, 1, -1, 0, "saddle point");
    if (name == "improper-node") return linear2("improper-node", 1, -4, 0, 4, -7, 0, "improper node");
    if (name == "star") return linear2("star", -1, 0, 0, 0, -1, 0, "star point");
    if (name == "nodal-sink") return linear2("nodal-sink", -2, 1, -2, 1, -2, 1, "nodal sink");
    if (name == "center") return linear2("center", 1, 2, 0, -5, -1, 0, "center point");
    if (name == "spiral") return linear2("spiral", -1, -1, -1, 2, -1, 5, "spiral point");
    if (name == "duffing") return duffing();
    if (name == "competing-species") return competing_species();
    if (name == "limit-cycle") return limit_cycle();
    if (name == "pendulum") return pendulum();
    if (name == "network") return network();
    if (name == "toggle") return toggle();
    if (name == "batch-reactor") return batch_reactor();
    std::string known;
    for (const auto& n : builtin_names()) known += (known.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown system '" + name + "'; available: " + known);
}

nlohmann::json catalog_manifest() {
    nlohmann::json systems = nlohmann::json::array();
    for (const auto& e : catalog_entries()) {
        nlohmann::json params = nlohmann::json::object();
        for (const auto& [k, v] : e.parameters) params[k] = v;
        systems.push_back({{"name", e.name},
                           {"kind", e.kind},
                           {"description", e.description},
                           {"state_dim", e.dim_u},
                           {"algebraic_dim", e.dim_v},
                           {"polynomial_rhs", e.polynomial},
                           {"parameters", params}});
    }
    return {{"format", "odefit-catalog"}, {"version", 1}, {"systems", systems}};
}

}  // namespace odefit
