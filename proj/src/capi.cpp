#include "karma/karma.h"

#include <cstring>
#include <memory>
#include <optional>
#include <string>

#include "karma/pipeline.hpp"

struct karma_config {
    karma::RunConfig cfg;
};

struct karma_env {
    karma::ScenarioConfig scenario;
    karma::GroundTruthEnv env;
    karma::ScriptedAttacker attacker;
    karma::Rng rng;
    int t = 0;
};

struct karma_twin {
    karma::Twin twin;
};

namespace {

thread_local std::string g_last_error;

karma_status status_of(karma::ErrorKind k) {
    switch (k) {
        case karma::ErrorKind::invalid_argument: return KARMA_ERR_INVALID_ARGUMENT;
        case karma::ErrorKind::encoding: return KARMA_ERR_ENCODING;
        case karma::ErrorKind::config: return KARMA_ERR_CONFIG;
        case karma::ErrorKind::io: return KARMA_ERR_IO;
        case karma::ErrorKind::runtime: return KARMA_ERR_RUNTIME;
    }
    return KARMA_ERR_RUNTIME;
}

template <class F>
karma_status guarded(F&& f) {
    try {
        f();
        g_last_error.clear();
        return KARMA_OK;
    } catch (const karma::Error& e) {
        g_last_error = e.what();
        return status_of(e.kind());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return KARMA_ERR_RUNTIME;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return KARMA_ERR_RUNTIME;
    }
}

void need(const void* p, const char* what) {
    if (!p) throw karma::invalid_argument(std::string(what) + " is null");
}

std::string str(const char* s) { return s ? s : ""; }

karma::PhaseOptions phase_options(const karma_run_options* o) {
    need(o, "options");
    karma::PhaseOptions p;
    p.seed = o->seed;
    p.out = str(o->out);
    if (o->episodes >= 0) p.episodes = o->episodes;
    try {
        if (o->scenario) p.scenario = karma::scenario_from_string(o->scenario);
        if (o->org) p.org = karma::org_mode_from_string(o->org);
    } catch (const karma::Error& e) {
        throw karma::config_error(e.what());
    }
    if (o->agents) p.agents = karma::agent_layout_from_string(o->agents);
    if (o->backend) p.backend = karma::backend_from_string(o->backend);
    p.no_mlp = o->no_mlp != 0;
    p.traces = str(o->traces);
    p.twin = str(o->twin);
    p.policies = str(o->policies);
    p.trajectories = str(o->trajectories);
    return p;
}

template <class Cmd>
karma_status run_phase(const karma_config* cfg, const karma_run_options* opts, Cmd cmd) {
    return guarded([&] {
        need(cfg, "config");
        cmd(cfg->cfg, phase_options(opts));
    });
}

}  // namespace

extern "C" {

const char* karma_version(void) { return "1.0.0"; }

const char* karma_last_error(void) { return g_last_error.c_str(); }

const char* karma_status_name(karma_status s) {
    switch (s) {
        case KARMA_OK: return "ok";
        case KARMA_ERR_INVALID_ARGUMENT: return "invalid_argument";
        case KARMA_ERR_ENCODING: return "encoding";
        case KARMA_ERR_CONFIG: return "config";
        case KARMA_ERR_IO: return "io";
        case KARMA_ERR_RUNTIME: return "runtime";
    }
    return "unknown";
}

karma_status karma_config_load(const char* path, karma_config** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new karma_config{karma::load_run_config(path)};
    });
}

karma_status karma_config_parse(const char* text, karma_config** out) {
    return guarded([&] {
        need(text, "text");
        need(out, "out");
        *out = new karma_config{karma::parse_run_config(text)};
    });
}

karma_status karma_config_set(karma_config* cfg, const char* key, const char* value) {
    return guarded([&] {
        need(cfg, "config");
        need(key, "key");
        need(value, "value");
        karma::set_config_value(cfg->cfg, key, value);
    });
}

karma_status karma_config_snapshot(const karma_config* cfg, char* buf, size_t cap, size_t* needed) {
    return guarded([&] {
        need(cfg, "config");
        const auto s = cfg->cfg.snapshot();
        if (needed) *needed = s.size();
        if (buf && cap > 0) {
            const auto n = std::min(cap - 1, s.size());
            std::memcpy(buf, s.data(), n);
            buf[n] = '\0';
        }
    });
}

void karma_config_free(karma_config* cfg) { delete cfg; }

void karma_run_options_init(karma_run_options* opts) {
    if (!opts) return;
    *opts = karma_run_options{};
    opts->episodes = -1;
}

karma_status karma_collect(const karma_config* cfg, const karma_run_options* opts) {
    return run_phase(cfg, opts, karma::cmd_collect);
}

karma_status karma_fit_twin(const karma_config* cfg, const karma_run_options* opts) {
    return run_phase(cfg, opts, karma::cmd_fit_twin);
}

karma_status karma_train(const karma_config* cfg, const karma_run_options* opts) {
    return run_phase(cfg, opts, karma::cmd_train);
}

karma_status karma_evaluate(const karma_config* cfg, const karma_run_options* opts) {
    return run_phase(cfg, opts, karma::cmd_evaluate);
}

karma_status karma_analyze(const karma_config* cfg, const karma_run_options* opts) {
    return run_phase(cfg, opts, karma::cmd_analyze);
}

karma_status karma_compare(const char* const* runs, size_t n_runs, const karma_run_options* opts) {
    return guarded([&] {
        auto p = phase_options(opts);
        if (n_runs > 0) need(runs, "runs");
        for (size_t i = 0; i < n_runs; ++i) p.runs.push_back(str(runs[i]));
        karma::cmd_compare(p);
    });
}

karma_status karma_verify_run(const char* dir) {
    return guarded([&] {
        need(dir, "dir");
        karma::verify_manifest(dir);
    });
}

karma_status karma_env_create(const karma_config* cfg, const char* scenario, uint64_t seed, karma_env** out) {
    return guarded([&] {
        need(cfg, "config");
        need(out, "out");
        auto rc = scenario ? cfg->cfg.with_scenario(karma::scenario_from_string(scenario)) : cfg->cfg;
        auto sc = rc.scenario;
        sc.seed = seed;
        *out = new karma_env{sc, karma::GroundTruthEnv(sc.dynamics, sc.action, seed), karma::ScriptedAttacker(sc),
                             karma::Rng(karma::Rng::derive(seed, 1)), 0};
        (*out)->env.reset(seed);
    });
}

karma_status karma_env_reset(karma_env* env, uint64_t seed) {
    return guarded([&] {
        need(env, "env");
        env->scenario.seed = seed;
        env->attacker = karma::ScriptedAttacker(env->scenario);
        env->rng = karma::Rng(karma::Rng::derive(seed, 1));
        env->t = 0;
        env->env.reset(seed);
    });
}

size_t karma_env_services(const karma_env* env) { return env ? static_cast<size_t>(env->scenario.action.d) : 0; }

karma_status karma_env_state(const karma_env* env, double* fields, size_t cap, size_t* needed) {
    return guarded([&] {
        need(env, "env");
        const auto& s = env->env.state();
        const size_t n = s.deployments.size() * karma::kFieldsPerDeployment;
        if (needed) *needed = n;
        if (!fields) return;
        if (cap < n) throw karma::invalid_argument("state buffer too small");
        size_t k = 0;
        for (const auto& d : s.deployments)
            for (double v : karma::fields_of(d)) fields[k++] = v;
    });
}

karma_status karma_env_step(karma_env* env, const int* services, const int* deltas, size_t n_agents, double* or_value) {
    return guarded([&] {
        need(env, "env");
        if (n_agents > 0) {
            need(services, "services");
            need(deltas, "deltas");
        }
        karma::JointAction joint;
        for (size_t k = 0; k < n_agents; ++k) {
            karma::DefenderAction a{services[k], deltas[k]};
            if (!karma::is_valid(a, env->scenario.action)) throw karma::invalid_argument("invalid defender action");
            joint.defenders.push_back(a);
        }
        joint.attacker = env->attacker.act(env->env.state(), env->t, env->rng);
        const auto outcome = env->env.step(joint);
        ++env->t;
        if (or_value) {
            const auto m = karma::compute_submetrics(outcome.state, outcome.counters, env->scenario.reward);
            *or_value = karma::operational_resilience(m, env->scenario.reward);
        }
    });
}

void karma_env_free(karma_env* env) { delete env; }

karma_status karma_twin_load(const char* dir, karma_twin** out) {
    return guarded([&] {
        need(dir, "dir");
        need(out, "out");
        *out = new karma_twin{karma::load_twin(karma::resolve_twin_dir(dir))};
    });
}

size_t karma_twin_table_size(const karma_twin* twin) { return twin ? twin->twin.table.size() : 0; }

int karma_twin_has_approximator(const karma_twin* twin) { return twin && twin->twin.approximator ? 1 : 0; }

karma_status karma_twin_accuracy(const karma_twin* twin, const char* trace_path, double tol, double* accuracy) {
    return guarded([&] {
        need(twin, "twin");
        need(trace_path, "trace_path");
        need(accuracy, "accuracy");
        *accuracy = karma::evaluate_accuracy(twin->twin, karma::load_trace(trace_path), tol);
    });
}

void karma_twin_free(karma_twin* twin) { delete twin; }

}  // extern "C"
