#pragma once

// Scenario configuration: schema-validated JSON in, computation objects out.
// Unknown keys are rejected up front with the offending key named.

#include "bath.hpp"
#include "control.hpp"
#include "dynamics.hpp"
#include "json_util.hpp"

#include <atomic>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace qns {

struct GridSpec {
    double t_min = 0.0, t_max = 0.0;
    int points = 0;
    bool log_spacing = true;

    std::vector<double> times() const {
        std::vector<double> t(points);
        for (int i = 0; i < points; ++i) {
            const double u = points == 1 ? 0.0 : (double)i / (double)(points - 1);
            t[i] = log_spacing ? t_min * std::pow(t_max / t_min, u)
                               : t_min + (t_max - t_min) * u;
        }
        return t;
    }

    static GridSpec from_json(const json& j) {
        require_keys(j, "grid", {"t_f_min", "t_f_max", "points", "spacing"});
        GridSpec g;
        g.t_min = get_num(j, "grid", "t_f_min");
        g.t_max = get_num(j, "grid", "t_f_max");
        g.points = (int)get_num(j, "grid", "points");
        if (j.contains("spacing")) {
            const std::string s = j["spacing"].get<std::string>();
            if (s == "log") g.log_spacing = true;
            else if (s == "linear") g.log_spacing = false;
            else throw ConfigError("grid: spacing must be 'log' or 'linear'");
        }
        if (g.points < 1) throw ConfigError("grid: points must be >= 1");
        if (!(g.t_max >= g.t_min)) throw ConfigError("grid: t_f_max < t_f_min");
        if (g.log_spacing && !(g.t_min > 0.0)) throw ConfigError("grid: log spacing needs t_f_min > 0");
        return g;
    }
};

struct NvPlanSpec {
    int M = 0;
    double T = 0.0;  // T <= 0: derive from the grid t_f as T = t_f/(2M)
};

struct ScenarioConfig {
    SpectralSum bath;
    bool has_bath = false;
    std::optional<NoiseModel> noise;
    json sequence_spec = json("hahn");
    std::optional<NvPlanSpec> nv_plan;
    QubitStart initial_state = QubitStart::down;
    double beta_V = 0.5;
    bool beta_overridden = false;
    double b_ext_dc = 0.0;
    GridSpec grid;

    PulseSequence sequence(double tf) const { return PulseSequence::from_config(sequence_spec, tf); }

    double quench_beta() const {
        if (beta_overridden) return beta_V;
        return initial_state == QubitStart::down ? 0.5 : -0.5;
    }

    static ScenarioConfig parse(const json& j) {
        require_keys(j, "config",
                     {"bath", "noise", "sequence", "nv_plan", "schedule", "grid", "b_ext_dc"});
        ScenarioConfig c;
        if (j.contains("bath")) {
            c.bath = SpectralSum::from_json([&] {
                json b = j["bath"];
                if (b.is_object() && b.contains("kT")) b.erase("kT");
                return b;
            }());
            c.has_bath = true;
            if (j["bath"].contains("kT"))
                c.noise = NoiseModel::thermal(c.bath, get_num(j["bath"], "bath", "kT"));
        }
        if (j.contains("noise")) {
            if (c.noise) throw ConfigError("config: both thermal bath kT and a noise block given");
            c.noise = NoiseModel::from_json(j["noise"]);
        }
        if (j.contains("sequence")) c.sequence_spec = j["sequence"];
        if (j.contains("nv_plan")) {
            require_keys(j["nv_plan"], "nv_plan", {"M", "T"});
            NvPlanSpec p;
            p.M = (int)get_num(j["nv_plan"], "nv_plan", "M");
            p.T = get_num_or(j["nv_plan"], "T", 0.0);
            if (p.M < 1) throw ConfigError("nv_plan: M must be >= 1");
            c.nv_plan = p;
        }
        if (j.contains("schedule")) {
            const json& s = j["schedule"];
            require_keys(s, "schedule", {"type", "initial_state", "beta_V"});
            if (s.contains("type") && s["type"].get<std::string>() != "step")
                throw ConfigError("schedule: only the step type is configurable here");
            if (s.contains("initial_state")) {
                const std::string st = s["initial_state"].get<std::string>();
                if (st == "down") c.initial_state = QubitStart::down;
                else if (st == "up") c.initial_state = QubitStart::up;
                else throw ConfigError("schedule: initial_state must be 'down' or 'up'");
            }
            if (s.contains("beta_V")) {
                c.beta_V = s["beta_V"].get<double>();
                c.beta_overridden = true;
            }
        }
        if (j.contains("b_ext_dc")) c.b_ext_dc = j["b_ext_dc"].get<double>();
        if (!j.contains("grid")) throw ConfigError("config: missing grid");
        c.grid = GridSpec::from_json(j["grid"]);
        return c;
    }
};

// Deterministic parallel map: results land in grid order whatever the
// completion order; the first worker exception is rethrown.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
    jobs = std::max(1, jobs);
    if (jobs == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mx;
    std::vector<std::thread> pool;
    const int nw = std::min<std::size_t>(jobs, n);
    for (int w = 0; w < nw; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mx);
                    if (!err) err = std::current_exception();
                    return;
                }
            }
        });
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

} // namespace qns
