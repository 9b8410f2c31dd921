#include "odefit/data.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "odefit/error.hpp"
#include "odefit/rng.hpp"

namespace odefit {

bool NoiseSpec::is_none() const {
    return std::all_of(laws.begin(), laws.end(),
                       [](const NoiseLaw& l) { return l.kind == NoiseLaw::Kind::none || l.scale == 0.0; });
}

const NoiseLaw& NoiseSpec::law(int component) const {
    static const NoiseLaw kNone{};
    if (laws.empty()) return kNone;
    if (laws.size() == 1) return laws.front();
    if (component >= static_cast<int>(laws.size())) {
        throw DimensionError("noise spec has " + std::to_string(laws.size()) + " laws, component " +
                             std::to_string(component) + " requested");
    }
    return laws[static_cast<std::size_t>(component)];
}

std::vector<TrajectoryBurst> synthesize_bursts(const System& system, const Domain& domain, const BurstOptions& opts,
                                               std::uint64_t seed) {
    if (opts.count < 1) throw std::invalid_argument("synthesize_bursts: need at least one burst");
    if (opts.intervals < 0) throw std::invalid_argument("synthesize_bursts: J must be >= 0");
    if (!(opts.dt > 0.0)) throw std::invalid_argument("synthesize_bursts: dt must be positive");
    if (domain.dim() != state_dim(system)) {
        throw DimensionError("domain dimension " + std::to_string(domain.dim()) + " differs from system dimension " +
                             std::to_string(state_dim(system)));
    }
    const auto initial = sample_initial_states(domain, opts.count, opts.strategy, seed);
    const RhsFn rhs = state_rhs(system);
    const int dv = algebraic_dim(system);
    const std::uint64_t retry_seed = derive_seed(seed, "retry");
    std::size_t retries_used = 0;

    std::vector<TrajectoryBurst> out;
    out.reserve(opts.count);
    for (std::size_t m = 0; m < opts.count; ++m) {
        Point u0 = initial[m];
        Trajectory traj;
        for (int attempt = 0;; ++attempt) {
            try {
                traj = integrate_rk4(rhs, u0, opts.dt, static_cast<std::size_t>(opts.intervals), opts.substeps);
                break;
            } catch (const BlowUpError&) {
                if (attempt + 1 >= opts.retry_cap) throw;
                u0 = sample_initial_states(domain, 1, SamplingStrategy::uniform, derive_seed(retry_seed, retries_used++))
                         .front();
            }
        }
        TrajectoryBurst b;
        b.id = static_cast<int>(m);
        b.dt = opts.dt;
        b.states.resize(static_cast<Eigen::Index>(traj.size()), domain.dim());
        for (std::size_t j = 0; j < traj.size(); ++j) b.states.row(static_cast<Eigen::Index>(j)) = traj[j].transpose();
        if (dv > 0) {
            Eigen::MatrixXd alg(static_cast<Eigen::Index>(traj.size()), dv);
            for (std::size_t j = 0; j < traj.size(); ++j) {
                alg.row(static_cast<Eigen::Index>(j)) = algebraic_state(system, traj[j]).transpose();
            }
            b.algebraic = std::move(alg);
        }
        out.push_back(std::move(b));
    }
    return out;
}

namespace {

void add_noise(Eigen::MatrixXd& m, const NoiseSpec& spec, Rng& rng) {
    if (spec.is_none()) return;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const NoiseLaw& law = spec.law(static_cast<int>(c));
            switch (law.kind) {
                case NoiseLaw::Kind::none: break;
                case NoiseLaw::Kind::uniform: m(i, c) += law.scale * (2.0 * uniform01(rng) - 1.0); break;
                case NoiseLaw::Kind::gaussian: m(i, c) += law.scale * normal(rng); break;
            }
        }
    }
}

}  // namespace

std::vector<TrajectoryBurst> perturb(const std::vector<TrajectoryBurst>& bursts, const NoiseSpec& state_noise,
                                     const NoiseSpec& algebraic_noise, const CorruptionSpec& corruption,
                                     const PerturbSeeds& seeds, PerturbReport* report) {
    if (corruption.count > bursts.size()) {
        throw std::invalid_argument("perturb: corruption count exceeds number of bursts");
    }
    for (const auto& law : state_noise.laws) {
        if (law.scale < 0.0) throw std::invalid_argument("perturb: negative noise scale");
    }
    std::vector<TrajectoryBurst> out = bursts;
    Rng noise_rng(seeds.noise);
    for (auto& b : out) {
        add_noise(b.states, state_noise, noise_rng);
        if (b.algebraic) add_noise(*b.algebraic, algebraic_noise, noise_rng);
    }
    if (corruption.count > 0) {
        Rng rng(seeds.corruption);
        std::vector<std::size_t> order(out.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        // Partial Fisher-Yates: the first `count` entries are the chosen bursts.
        for (std::size_t i = 0; i < corruption.count; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng() % (order.size() - i));
            std::swap(order[i], order[j]);
        }
        std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(corruption.count));
        std::sort(chosen.begin(), chosen.end());
        std::normal_distribution<double> normal(corruption.mean, corruption.stddev);
        for (std::size_t idx : chosen) {
            auto& b = out[idx];
            for (Eigen::Index i = 0; i < b.states.size(); ++i) b.states.data()[i] += normal(rng);
            if (b.algebraic) {
                for (Eigen::Index i = 0; i < b.algebraic->size(); ++i) b.algebraic->data()[i] += normal(rng);
            }
            if (report) report->corrupted_ids.push_back(b.id);
        }
    }
    return out;
}

namespace {

// Least-squares polynomial of degree L through rows [first, first+count) of
// `values`, in the scaled variable s = (t - t_c)/dt. Returns (L+1) x cols
// coefficients in s.
Eigen::MatrixXd local_fit(const Eigen::MatrixXd& values, int first, int count, int center, int degree) {
    Eigen::MatrixXd V(count, degree + 1);
    for (int r = 0; r < count; ++r) {
        const double s = static_cast<double>(first + r - center);
        double p = 1.0;
        for (int k = 0; k <= degree; ++k) {
            V(r, k) = p;
            p *= s;
        }
    }
    return V.colPivHouseholderQr().solve(values.middleRows(first, count));
}

}  // namespace

std::vector<DataPairing> estimate_derivatives(const TrajectoryBurst& burst, const DerivativeMethod& method) {
    const int J = burst.intervals();
    const double dt = burst.dt;
    std::vector<DataPairing> out;
    if (method.kind == DerivativeMethod::Kind::central) {
        if (J < 2) {
            throw std::invalid_argument("central differences need J >= 2, burst " + std::to_string(burst.id) +
                                        " has J = " + std::to_string(J));
        }
        for (int j = 1; j < J; ++j) {
            DataPairing p;
            p.x = burst.states.row(j).transpose();
            p.xdot = (burst.states.row(j + 1) - burst.states.row(j - 1)).transpose() / (2.0 * dt);
            if (burst.algebraic) p.v = Point(burst.algebraic->row(j).transpose());
            p.burst_id = burst.id;
            p.t = burst.time(j);
            out.push_back(std::move(p));
        }
        return out;
    }

    const int L = method.degree;
    if (L < 1 || L > J) {
        throw std::invalid_argument("lsq derivative needs 1 <= L <= J (L = " + std::to_string(L) +
                                    ", J = " + std::to_string(J) + ")");
    }
    auto emit = [&](int first, int count, int center) {
        const Eigen::MatrixXd a = local_fit(burst.states, first, count, center, L);
        DataPairing p;
        p.x = a.row(0).transpose();
        p.xdot = a.row(1).transpose() / dt;
        if (burst.algebraic) {
            const Eigen::MatrixXd b = local_fit(*burst.algebraic, first, count, center, L);
            p.v = Point(b.row(0).transpose());
        }
        p.burst_id = burst.id;
        p.t = burst.time(center);
        out.push_back(std::move(p));
    };
    if (method.window <= 0) {
        emit(0, J + 1, J / 2);
        return out;
    }
    const int w = method.window;
    if (w % 2 == 0 || w < L + 1 || w > J + 1) {
        throw std::invalid_argument("lsq sliding window must be odd with L+1 <= window <= J+1");
    }
    const int half = w / 2;
    for (int c = half; c + half <= J; ++c) emit(c - half, w, c);
    return out;
}

std::vector<DataPairing> estimate_derivatives(const std::vector<TrajectoryBurst>& bursts,
                                              const DerivativeMethod& method) {
    std::vector<DataPairing> out;
    for (const auto& b : bursts) {
        auto p = estimate_derivatives(b, method);
        for (auto& q : p) {
            if (q.x.allFinite() && q.xdot.allFinite()) out.push_back(std::move(q));
        }
    }
    return out;
}

std::vector<DataPairing> drop_outside(std::vector<DataPairing> pairings, const Domain& domain) {
    std::erase_if(pairings, [&](const DataPairing& p) { return !domain.contains(p.x); });
    return pairings;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

constexpr const char* kBurstHeader = "# odefit-bursts v1";
constexpr const char* kPairingHeader = "# odefit-pairings v1";

void put(std::ostream& os, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    os.write(buf, res.ptr - buf);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& s, std::size_t line) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    while (b < e && *b == ' ') ++b;
    const auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e) throw ParseError("bad number '" + s + "'", line);
    if (!std::isfinite(v)) throw ParseError("non-finite value '" + s + "'", line);
    return v;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

void expect_version(std::istream& is, const std::string& expected, std::size_t& line_no) {
    std::string line;
    if (!std::getline(is, line)) throw ParseError("empty file", 1);
    ++line_no;
    line = strip_cr(line);
    const std::string prefix = expected.substr(0, expected.rfind(' '));
    if (line.rfind(prefix, 0) != 0) throw ParseError("missing '" + prefix + "' header", line_no);
    if (line != expected) {
        throw ParseError("unsupported format version '" + line.substr(prefix.size() + 1) + "' (supported: " +
                             expected.substr(prefix.size() + 1) + ")",
                         line_no);
    }
}

struct ColumnLayout {
    int d = 0;
    int dv = 0;
};

int count_prefix(const std::vector<std::string>& cols, const std::string& prefix) {
    int n = 0;
    for (const auto& c : cols) {
        if (c.rfind(prefix, 0) == 0) ++n;
    }
    return n;
}

}  // namespace

void write_bursts_csv(std::ostream& os, const std::vector<TrajectoryBurst>& bursts) {
    os << kBurstHeader << '\n';
    if (bursts.empty()) {
        os << "burst_id,t\n";
        return;
    }
    const auto d = bursts.front().states.cols();
    const auto dv = bursts.front().algebraic ? bursts.front().algebraic->cols() : 0;
    os << "burst_id,t";
    for (Eigen::Index k = 0; k < d; ++k) os << ",x_" << k + 1;
    for (Eigen::Index k = 0; k < dv; ++k) os << ",v_" << k + 1;
    os << '\n';
    for (const auto& b : bursts) {
        for (Eigen::Index j = 0; j < b.states.rows(); ++j) {
            os << b.id << ',';
            put(os, b.time(static_cast<int>(j)));
            for (Eigen::Index k = 0; k < d; ++k) {
                os << ',';
                put(os, b.states(j, k));
            }
            for (Eigen::Index k = 0; k < dv; ++k) {
                os << ',';
                put(os, (*b.algebraic)(j, k));
            }
            os << '\n';
        }
    }
}

std::vector<TrajectoryBurst> read_bursts_csv(std::istream& is) {
    std::size_t line_no = 0;
    expect_version(is, kBurstHeader, line_no);
    std::string line;
    if (!std::getline(is, line)) throw ParseError("missing column header", line_no + 1);
    ++line_no;
    const auto cols = split(strip_cr(line));
    if (cols.size() < 2 || cols[0] != "burst_id" || cols[1] != "t") {
        throw ParseError("column header must start with burst_id,t", line_no);
    }
    ColumnLayout lay{count_prefix(cols, "x_"), count_prefix(cols, "v_")};
    if (static_cast<int>(cols.size()) != 2 + lay.d + lay.dv) throw ParseError("unexpected columns", line_no);

    std::vector<TrajectoryBurst> out;
    std::vector<std::vector<double>> rows;
    std::vector<double> times;
    int current = -1;
    auto flush = [&]() {
        if (rows.empty()) return;
        TrajectoryBurst b;
        b.id = current;
        b.t0 = times.front();
        b.dt = times.size() > 1 ? times[1] - times[0] : 0.0;
        const auto n = static_cast<Eigen::Index>(rows.size());
        b.states.resize(n, lay.d);
        if (lay.dv > 0) b.algebraic = Eigen::MatrixXd(n, lay.dv);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (int k = 0; k < lay.d; ++k) b.states(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
            for (int k = 0; k < lay.dv; ++k) {
                (*b.algebraic)(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(lay.d + k)];
            }
        }
        out.push_back(std::move(b));
        rows.clear();
        times.clear();
    };
    while (std::getline(is, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != cols.size()) {
            throw ParseError("expected " + std::to_string(cols.size()) + " fields, found " +
                                 std::to_string(cells.size()),
                             line_no);
        }
        const double idv = parse_number(cells[0], line_no);
        const int id = static_cast<int>(idv);
        if (id != idv) throw ParseError("burst_id must be an integer", line_no);
        if (id != current) {
            flush();
            current = id;
        }
        const double t = parse_number(cells[1], line_no);
        if (!times.empty() && !(t > times.back())) throw ParseError("times must increase within a burst", line_no);
        times.push_back(t);
        std::vector<double> r;
        for (std::size_t k = 2; k < cells.size(); ++k) r.push_back(parse_number(cells[k], line_no));
        rows.push_back(std::move(r));
    }
    flush();
    return out;
}

void write_pairings_csv(std::ostream& os, const std::vector<DataPairing>& pairings) {
    os << kPairingHeader << '\n';
    const auto d = pairings.empty() ? 0 : pairings.front().x.size();
    const auto dv = (!pairings.empty() && pairings.front().v) ? pairings.front().v->size() : 0;
    for (Eigen::Index k = 0; k < d; ++k) os << (k ? "," : "") << "x_" << k + 1;
    for (Eigen::Index k = 0; k < d; ++k) os << ",xdot_" << k + 1;
    os << ",burst_id,t";
    for (Eigen::Index k = 0; k < dv; ++k) os << ",v_" << k + 1;
    os << '\n';
    for (const auto& p : pairings) {
        for (Eigen::Index k = 0; k < d; ++k) {
            if (k) os << ',';
            put(os, p.x[k]);
        }
        for (Eigen::Index k = 0; k < d; ++k) {
            os << ',';
            put(os, p.xdot[k]);
        }
        os << ',' << p.burst_id << ',';
        put(os, p.t);
        for (Eigen::Index k = 0; k < dv; ++k) {
            os << ',';
            put(os, (*p.v)[k]);
        }
        os << '\n';
    }
}

std::vector<DataPairing> read_pairings_csv(std::istream& is, int expected_dim) {
    std::size_t line_no = 0;
    expect_version(is, kPairingHeader, line_no);
    std::string line;
    if (!std::getline(is, line)) throw ParseError("missing column header", line_no + 1);
    ++line_no;
    const auto cols = split(strip_cr(line));
    const int d = count_prefix(cols, "x_");
    const int dd = count_prefix(cols, "xdot_");
    const int dv = count_prefix(cols, "v_");
    if (d < 1 || d != dd) throw ParseError("header needs matching x_k and xdot_k columns", line_no);
    if (static_cast<int>(cols.size()) != 2 * d + 2 + dv) throw ParseError("unexpected columns", line_no);
    for (int k = 0; k < d; ++k) {
        if (cols[static_cast<std::size_t>(k)] != "x_" + std::to_string(k + 1) ||
            cols[static_cast<std::size_t>(d + k)] != "xdot_" + std::to_string(k + 1)) {
            throw ParseError("columns must be x_1..x_d, xdot_1..xdot_d, burst_id, t", line_no);
        }
    }
    if (cols[static_cast<std::size_t>(2 * d)] != "burst_id" || cols[static_cast<std::size_t>(2 * d + 1)] != "t") {
        throw ParseError("columns must be x_1..x_d, xdot_1..xdot_d, burst_id, t", line_no);
    }
    if (expected_dim >= 0 && d != expected_dim) {
        throw DimensionError("pairing file has dimension " + std::to_string(d) + ", expected " +
                             std::to_string(expected_dim));
    }
    std::vector<DataPairing> out;
    while (std::getline(is, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != cols.size()) {
            throw ParseError("expected " + std::to_string(cols.size()) + " fields, found " +
                                 std::to_string(cells.size()),
                             line_no);
        }
        DataPairing p;
        p.x.resize(d);
        p.xdot.resize(d);
        for (int k = 0; k < d; ++k) {
            p.x[k] = parse_number(cells[static_cast<std::size_t>(k)], line_no);
            p.xdot[k] = parse_number(cells[static_cast<std::size_t>(d + k)], line_no);
        }
        const double idv = parse_number(cells[static_cast<std::size_t>(2 * d)], line_no);
        p.burst_id = static_cast<int>(idv);
        if (p.burst_id != idv) throw ParseError("burst_id must be an integer", line_no);
        p.t = parse_number(cells[static_cast<std::size_t>(2 * d + 1)], line_no);
        if (dv > 0) {
            Point v(dv);
            for (int k = 0; k < dv; ++k) v[k] = parse_number(cells[static_cast<std::size_t>(2 * d + 2 + k)], line_no);
            p.v = std::move(v);
        }
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace odefit
