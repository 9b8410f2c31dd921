#pragma once

#include <map>
#include <string>
#include <vector>

#include "vendor_json.hpp"
#include "odefit/dynamics.hpp"

namespace odefit {

struct CatalogEntry {
    std::string name;
    std::string kind;  // "ode" or "dae"
    std::string description;
    int dim_u;
    int dim_v;
    bool polynomial;
    std::vector<std::pair<std::string, double>> parameters;
};

const std::vector<CatalogEntry>& catalog_entries();

// Machine-readable description of every builtin system and its parameters.
nlohmann::json catalog_manifest();

// Newton iteration on a scalar increasing function with a bracketing fallback.
// Returns x with |h(x)| small or the bracket width below tol.
double safeguarded_newton(const std::function<double(double)>& h, const std::function<double(double)>& dh,
                          double lo, double hi, double x0, double tol = 1e-13);

}  // namespace odefit
