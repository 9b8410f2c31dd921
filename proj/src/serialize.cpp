#include "odefit/serialize.hpp"

#include "odefit/error.hpp"

namespace odefit {

using nlohmann::json;

namespace {

void require_format(const json& j, const char* format) {
    if (!j.is_object() || j.value("format", "") != format) {
        throw ParseError(std::string("expected a document with format '") + format + "'");
    }
    const int version = j.value("version", 0);
    if (version != 1) throw ParseError("unsupported " + std::string(format) + " version " + std::to_string(version));
}

std::vector<Interval> bounds_from_json(const json& j) {
    std::vector<Interval> out;
    for (const auto& b : j) {
        if (!b.is_array() || b.size() != 2) throw ParseError("bounds entries must be [lo, hi]");
        out.push_back({b[0].get<double>(), b[1].get<double>()});
    }
    return out;
}

json bounds_to_json(const std::vector<Interval>& bounds) {
    json b = json::array();
    for (const auto& iv : bounds) b.push_back({iv.lo, iv.hi});
    return b;
}

}  // namespace

json to_json(const BasisSpec& basis) {
    return {{"kind", to_string(basis.kind())},
            {"degree", basis.degree()},
            {"dim", basis.dim()},
            {"size", basis.size()},
            {"bounds", bounds_to_json(basis.bounds())}};
}

BasisSpec basis_from_json(const json& j) {
    auto bounds = bounds_from_json(j.at("bounds"));
    if (j.contains("dim") && j.at("dim").get<int>() != static_cast<int>(bounds.size())) {
        throw DimensionError("basis dim disagrees with its bounds");
    }
    return BasisSpec(parse_basis_kind(j.at("kind").get<std::string>()), j.at("degree").get<int>(), std::move(bounds));
}

json to_json(const Domain& domain) {
    return {{"bounds", bounds_to_json(domain.bounds())}, {"mask", domain.mask().to_string()}};
}

Domain domain_from_json(const json& j) {
    return Domain(bounds_from_json(j.at("bounds")), Mask::parse(j.value("mask", std::string("none"))));
}

json to_json(const FitDiagnostics& d) {
    return {{"residual_norm", d.residual_norm}, {"iterations", d.iterations},   {"converged", d.converged},
            {"objective_gap", d.objective_gap}, {"sigma_min", d.sigma_min},     {"sigma_max", d.sigma_max},
            {"rank", d.rank}};
}

json coefficients_to_json(const CoefficientSet& cs, const Domain* domain) {
    json j;
    j["format"] = "odefit-coefficients";
    j["version"] = 1;
    j["basis"] = to_json(cs.basis);
    j["components"] = cs.components();
    if (domain) j["domain"] = to_json(*domain);
    json terms = json::array();
    const auto& idx = cs.basis.indices();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        json values = json::array();
        for (int l = 0; l < cs.components(); ++l) values.push_back(cs.coeffs(static_cast<Eigen::Index>(i), l));
        terms.push_back({{"exponents", std::vector<int>(idx[i].exponents().begin(), idx[i].exponents().end())},
                         {"values", values}});
    }
    j["terms"] = std::move(terms);
    json diag = json::array();
    for (const auto& d : cs.diagnostics) diag.push_back(to_json(d));
    j["diagnostics"] = std::move(diag);
    return j;
}

CoefficientSet coefficients_from_json(const json& j) {
    require_format(j, "odefit-coefficients");
    BasisSpec basis = basis_from_json(j.at("basis"));
    const int comps = j.at("components").get<int>();
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(basis.size()), comps);
    for (const auto& t : j.at("terms")) {
        const MultiIndex mi(t.at("exponents").get<std::vector<int>>());
        if (mi.dim() != basis.dim()) throw DimensionError("term " + mi.to_string() + " has wrong dimension");
        const std::size_t row = basis.find(mi);
        if (row == basis.size()) throw DimensionError("term " + mi.to_string() + " outside the basis");
        const auto values = t.at("values").get<std::vector<double>>();
        if (static_cast<int>(values.size()) != comps) throw DimensionError("term has wrong component count");
        for (int l = 0; l < comps; ++l) c(static_cast<Eigen::Index>(row), l) = values[static_cast<std::size_t>(l)];
    }
    CoefficientSet cs(std::move(basis), std::move(c));
    if (j.contains("diagnostics")) {
        for (const auto& d : j.at("diagnostics")) {
            FitDiagnostics fd;
            fd.residual_norm = d.value("residual_norm", 0.0);
            fd.iterations = d.value("iterations", 0);
            fd.converged = d.value("converged", true);
            fd.objective_gap = d.value("objective_gap", 0.0);
            fd.sigma_min = d.value("sigma_min", 0.0);
            fd.sigma_max = d.value("sigma_max", 0.0);
            fd.rank = d.value("rank", 0);
            cs.diagnostics.push_back(fd);
        }
    }
    return cs;
}

json sa_snapshot_to_json(const SaState& state, const BasisSpec& basis) {
    json j = coefficients_to_json(CoefficientSet(basis, state.coeffs));
    j["sa"] = {{"k", state.k}, {"gamma", state.gamma.tag()}};
    if (state.constraint.cols() > 0) j["sa"]["constraint"] = coefficients_to_json(CoefficientSet(basis, state.constraint));
    return j;
}

SaState sa_snapshot_from_json(const json& j, BasisSpec* basis) {
    CoefficientSet cs = coefficients_from_json(j);
    if (!j.contains("sa")) throw ParseError("coefficient document has no sequential-approximation block");
    const auto& sa = j.at("sa");
    SaState st;
    st.coeffs = cs.coeffs;
    st.k = sa.at("k").get<std::uint64_t>();
    st.gamma = GammaSchedule::parse(sa.at("gamma").get<std::string>());
    if (sa.contains("constraint")) {
        CoefficientSet g = coefficients_from_json(sa.at("constraint"));
        if (!g.basis.same_space(cs.basis)) throw DimensionError("snapshot constraint uses a different basis");
        st.constraint = g.coeffs;
    } else {
        st.constraint.resize(cs.coeffs.rows(), 0);
    }
    if (basis) *basis = cs.basis;
    return st;
}

}  // namespace odefit
