#pragma once

#include "odefit/coefficients.hpp"
#include "odefit/domain.hpp"
#include "odefit/sequential.hpp"
#include "odefit/vendor_json.hpp"

namespace odefit {

nlohmann::json to_json(const BasisSpec& basis);
BasisSpec basis_from_json(const nlohmann::json& j);

// {"bounds": [[lo, hi], ...], "mask": "<preset>"}
nlohmann::json to_json(const Domain& domain);
Domain domain_from_json(const nlohmann::json& j);

nlohmann::json to_json(const FitDiagnostics& d);

// Header (format, version, basis, optional domain), one term per
// multi-index with one value per component, then diagnostics.
nlohmann::json coefficients_to_json(const CoefficientSet& cs, const Domain* domain = nullptr);
CoefficientSet coefficients_from_json(const nlohmann::json& j);

// Resumable snapshot: coefficient document plus step counter, schedule tag
// and the streamed constraint coefficients when present.
nlohmann::json sa_snapshot_to_json(const SaState& state, const BasisSpec& basis);
SaState sa_snapshot_from_json(const nlohmann::json& j, BasisSpec* basis = nullptr);

}  // namespace odefit
