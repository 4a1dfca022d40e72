#include "risnoma/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "risnoma/errors.hpp"

namespace risnoma {

using nlohmann::json;

PolicyKind parse_policy(const std::string& s) {
    if (s == "ddpg") return PolicyKind::ddpg;
    if (s == "ac") return PolicyKind::ac;
    if (s == "random") return PolicyKind::random;
    if (s == "off") return PolicyKind::off;
    throw ConfigError(fmt::format("policy: unknown value '{}' (ddpg, ac, random, off)", s));
}

std::string to_string(PolicyKind p) {
    switch (p) {
        case PolicyKind::ddpg: return "ddpg";
        case PolicyKind::ac: return "ac";
        case PolicyKind::random: return "random";
        case PolicyKind::off: return "off";
    }
    return "?";
}

ExperimentConfig with_seed(ExperimentConfig cfg, std::uint64_t seed) {
    cfg.seed = seed;
    cfg.env.seed = seed;
    cfg.ddpg.seed = seed;
    return cfg;
}

double dbm_to_watt(double dbm) {
    return std::pow(10.0, (dbm - 30.0) / 10.0);
}

std::vector<Position3D> GeometryConfig::resolve_users() const {
    if (!users.empty()) {
        return users;
    }
    CounterRng rng(placement.seed, 0x504c4143);
    return place_users(placement.count, placement.radius_min, placement.radius_max, rng);
}

std::size_t ExperimentConfig::users() const {
    return geometry.users.empty() ? geometry.placement.count : geometry.users.size();
}

ChannelConfig ExperimentConfig::channel_config() const {
    ChannelConfig c;
    c.bs = geometry.bs;
    c.ris = geometry.ris;
    c.users = geometry.resolve_users();
    c.path_loss = path_loss;
    c.wavelength_m = wavelength_m;
    c.element_spacing_wl = element_spacing_wl;
    c.ris_elements = ris_elements;
    return c;
}

ExperimentConfig default_config() {
    ExperimentConfig c;
    c.env.noma.p_tx.assign(c.geometry.placement.count, 0.1);
    c.env.noma.xi = 0.9;
    c.env.noma.sigma_sq = dbm_to_watt(-110.0);
    c.env.noma.r0 = 0.6;
    c.env.noma.bandwidth_hz = 1e6;
    c.env.ris_noise = {dbm_to_watt(-110.0), 0.0};
    c.env.solar.s_sol = 0.0;
    return c;
}

void ExperimentConfig::validate() const {
    const std::size_t k = users();
    if (k == 0) throw ConfigError("geometry: at least one user is required");
    if (ris_elements == 0) throw ConfigError("ris.elements must be >= 1");
    if (!(geometry.ris.z > 0.0)) throw ConfigError("geometry.ris: z must be positive");
    if (!(path_loss.alpha_direct > 0.0 && path_loss.alpha_bs_ris > 0.0 && path_loss.alpha_ris_user > 0.0)) {
        throw ConfigError("channel: path-loss exponents must be positive");
    }
    if (!(wavelength_m > 0.0)) throw ConfigError("channel.wavelength_m must be positive");
    if (!(element_spacing_wl > 0.0)) throw ConfigError("channel.element_spacing_wl must be positive");
    if (geometry.users.empty()) {
        const auto& p = geometry.placement;
        if (!(p.radius_min >= 1.0 && p.radius_max >= p.radius_min)) {
            throw ConfigError("geometry.placement: need 1 <= radius_min <= radius_max");
        }
    }
    env.validate(k);
    predictor.validate();
    if (predictor.window != env.window) throw ConfigError("predictor.window must equal ucs.window");
    if (predictor_data.series_length <= env.window + 1) {
        throw ConfigError("predictor.series_length must exceed ucs.window + 1");
    }
    if (!(predictor_data.split > 0.0 && predictor_data.split <= 1.0)) {
        throw ConfigError("predictor.split must lie in (0, 1]");
    }
    ddpg.validate();
    if (episodes == 0 || steps == 0) throw ConfigError("training: episodes and steps must be >= 1");
    if (eval_episodes == 0) throw ConfigError("evaluation.episodes must be >= 1");
    if (!sweep.axis.empty()) {
        if (sweep.axis != "K" && sweep.axis != "R0" && sweep.axis != "L" && sweep.axis != "M") {
            throw ConfigError(fmt::format("sweep.axis: unknown axis '{}' (K, R0, L, M)", sweep.axis));
        }
        if (sweep.values.empty()) throw ConfigError("sweep.values must not be empty");
    }
}

namespace {

/// Walks one JSON object, remembering which keys were read so leftovers can
/// be reported as unknown.
class Reader {
public:
    Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) {
            throw ConfigError(fmt::format("{}: expected an object", where()));
        }
    }

    ~Reader() noexcept(false) {
        if (std::uncaught_exceptions() > 0) {
            return;
        }
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (!seen_.count(it.key())) {
                throw ConfigError(fmt::format("{}: unknown key '{}'", where(), it.key()));
            }
        }
    }

    Reader(const Reader&) = delete;
    Reader& operator=(const Reader&) = delete;

    [[nodiscard]] bool has(const std::string& key) const { return obj_.contains(key); }

    template <typename T>
    void get(const std::string& key, T& out) {
        if (!obj_.contains(key)) {
            return;
        }
        seen_.insert(key);
        try {
            out = obj_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(fmt::format("{}: wrong type for this field", field(key)));
        }
    }

    Reader child(const std::string& key) {
        seen_.insert(key);
        return Reader(obj_.at(key), field(key));
    }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return obj_.at(key);
    }

    [[nodiscard]] std::string field(const std::string& key) const {
        return path_.empty() ? fmt::format("field '{}'", key) : fmt::format("field '{}.{}'", strip(path_), key);
    }

private:
    [[nodiscard]] std::string where() const { return path_.empty() ? std::string("config") : path_; }
    static std::string strip(const std::string& p) {
        const std::string prefix = "field '";
        if (p.rfind(prefix, 0) == 0) {
            return p.substr(prefix.size(), p.size() - prefix.size() - 1);
        }
        return p;
    }

    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

Position3D read_position(const json& j, const std::string& field) {
    if (!j.is_array() || j.size() != 3) {
        throw ConfigError(fmt::format("{}: expected [x, y, z]", field));
    }
    try {
        return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
    } catch (const json::exception&) {
        throw ConfigError(fmt::format("{}: coordinates must be numbers", field));
    }
}

template <typename F>
void with_child(Reader& r, const std::string& key, F&& f) {
    if (r.has(key)) {
        Reader c = r.child(key);
        f(c);
    }
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("config: malformed JSON ({})", e.what()));
    }
    ExperimentConfig c = default_config();
    std::optional<json> p_tx;
    {
        Reader r(doc, "");
        r.get("name", c.name);
        r.get("seed", c.seed);
        std::string policy;
        r.get("policy", policy);
        if (!policy.empty()) c.policy = parse_policy(policy);

        with_child(r, "geometry", [&](Reader& g) {
            if (g.has("bs")) c.geometry.bs = read_position(g.raw("bs"), g.field("bs"));
            if (g.has("ris")) c.geometry.ris = read_position(g.raw("ris"), g.field("ris"));
            if (g.has("users")) {
                const json& u = g.raw("users");
                if (!u.is_array()) throw ConfigError(g.field("users") + ": expected a list of [x, y, z]");
                c.geometry.users.clear();
                for (std::size_t i = 0; i < u.size(); ++i) {
                    c.geometry.users.push_back(read_position(u[i], fmt::format("{}[{}]", g.field("users"), i)));
                }
            }
            with_child(g, "placement", [&](Reader& p) {
                p.get("count", c.geometry.placement.count);
                p.get("radius_min", c.geometry.placement.radius_min);
                p.get("radius_max", c.geometry.placement.radius_max);
                p.get("seed", c.geometry.placement.seed);
            });
        });
        with_child(r, "channel", [&](Reader& ch) {
            ch.get("c0_db", c.path_loss.c0_db);
            ch.get("alpha_direct", c.path_loss.alpha_direct);
            ch.get("alpha_bs_ris", c.path_loss.alpha_bs_ris);
            ch.get("alpha_ris_user", c.path_loss.alpha_ris_user);
            ch.get("wavelength_m", c.wavelength_m);
            ch.get("element_spacing_wl", c.element_spacing_wl);
        });
        with_child(r, "ris", [&](Reader& ri) {
            ri.get("elements", c.ris_elements);
            ri.get("max_amp", c.env.max_amp);
            std::string kind;
            ri.get("kind", kind);
            if (!kind.empty()) c.env.ris = parse_ris_kind(kind);
        });
        with_child(r, "noise", [&](Reader& n) {
            double dbm = 0.0;
            if (n.has("receiver_dbm")) {
                n.get("receiver_dbm", dbm);
                c.env.noma.sigma_sq = dbm_to_watt(dbm);
            }
            if (n.has("ris_dynamic_dbm")) {
                n.get("ris_dynamic_dbm", dbm);
                c.env.ris_noise.sigma_z_sq = dbm_to_watt(dbm);
            }
            n.get("receiver_w", c.env.noma.sigma_sq);
            n.get("ris_dynamic_w", c.env.ris_noise.sigma_z_sq);
            n.get("ris_static_w", c.env.ris_noise.sigma_s_sq);
        });
        with_child(r, "noma", [&](Reader& n) {
            std::string mode;
            n.get("mode", mode);
            if (!mode.empty()) c.env.access = parse_access_mode(mode);
            n.get("xi", c.env.noma.xi);
            n.get("r0", c.env.noma.r0);
            n.get("bandwidth_hz", c.env.noma.bandwidth_hz);
            if (n.has("p_tx")) p_tx = n.raw("p_tx");
        });
        with_child(r, "energy", [&](Reader& e) {
            with_child(e, "rf", [&](Reader& rf) {
                rf.get("e_max", c.env.rf.e_max);
                rf.get("a", c.env.rf.a);
                rf.get("b", c.env.rf.b);
            });
            with_child(e, "solar", [&](Reader& s) {
                s.get("s_sol", c.env.solar.s_sol);
                s.get("a1", c.env.solar.a1);
                s.get("a2", c.env.solar.a2);
                s.get("a3", c.env.solar.a3);
                s.get("sigma_sol", c.env.solar.sigma_sol);
                s.get("random_cloud", c.env.random_cloud);
                s.get("start_hour", c.env.start_hour);
            });
            e.get("slot_seconds", c.env.slot_seconds);
            e.get("harvest_cap", c.env.harvest_cap);
            e.get("e_max", c.env.e_max);
            e.get("initial_battery", c.env.initial_battery);
            e.get("eta", c.env.eta);
        });
        with_child(r, "ucs", [&](Reader& u) {
            u.get("initial", c.env.ucs_initial);
            u.get("max_step", c.env.walk.max_step);
            u.get("window", c.env.window);
            std::string mode;
            u.get("state_mode", mode);
            if (!mode.empty()) c.env.state_mode = parse_state_mode(mode);
        });
        with_child(r, "predictor", [&](Reader& p) {
            p.get("enabled", c.use_predictor);
            p.get("hidden", c.predictor.hidden);
            p.get("layers", c.predictor.layers);
            p.get("epochs", c.predictor.epochs);
            p.get("batch_size", c.predictor.batch_size);
            p.get("lr", c.predictor.lr);
            p.get("lr_final", c.predictor.lr_final);
            p.get("rho", c.predictor.rho);
            p.get("validation_fraction", c.predictor.validation_fraction);
            p.get("residual", c.predictor.residual);
            p.get("seed", c.predictor.seed);
            p.get("series_length", c.predictor_data.series_length);
            p.get("split", c.predictor_data.split);
            p.get("series_seed", c.predictor_data.series_seed);
        });
        with_child(r, "ddpg", [&](Reader& d) {
            d.get("hidden", c.ddpg.hidden);
            d.get("actor_lr", c.ddpg.actor_lr);
            d.get("critic_lr", c.ddpg.critic_lr);
            d.get("tau", c.ddpg.tau);
            d.get("gamma", c.ddpg.gamma);
            d.get("batch", c.ddpg.batch);
            d.get("memory", c.ddpg.memory);
            d.get("noise_ini", c.ddpg.noise_ini);
            d.get("noise_end", c.ddpg.noise_end);
            d.get("noise_anneal_fraction", c.ddpg.noise_anneal_fraction);
            d.get("reward_scale", c.ddpg.reward_scale);
        });
        r.get("reward", c.env.reward_unit);
        with_child(r, "training", [&](Reader& t) {
            t.get("episodes", c.episodes);
            t.get("steps", c.steps);
        });
        with_child(r, "evaluation", [&](Reader& e) {
            e.get("episodes", c.eval_episodes);
            e.get("first_episode", c.eval_first_episode);
        });
        with_child(r, "sweep", [&](Reader& s) {
            s.get("axis", c.sweep.axis);
            s.get("values", c.sweep.values);
            s.get("retrain", c.sweep.retrain);
        });
        with_child(r, "output", [&](Reader& o) { o.get("dir", c.output_dir); });
    }

    const std::size_t k = c.users();
    if (p_tx) {
        if (p_tx->is_number()) {
            c.env.noma.p_tx.assign(k, p_tx->get<double>());
        } else if (p_tx->is_array()) {
            try {
                c.env.noma.p_tx = p_tx->get<std::vector<double>>();
            } catch (const json::exception&) {
                throw ConfigError("field 'noma.p_tx': expected a number or a list of numbers");
            }
        } else {
            throw ConfigError("field 'noma.p_tx': expected a number or a list of numbers");
        }
    } else {
        const double p = c.env.noma.p_tx.empty() ? 0.1 : c.env.noma.p_tx.front();
        c.env.noma.p_tx.assign(k, p);
    }
    c.env.seed = c.seed;
    c.ddpg.seed = c.seed;
    c.ddpg.use_targets_and_replay = c.policy != PolicyKind::ac;
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(fmt::format("config: cannot read '{}'", path.string()));
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) {
    const auto pos = [](const Position3D& p) { return json::array({p.x, p.y, p.z}); };
    json users = json::array();
    for (const auto& u : c.geometry.users) {
        users.push_back(pos(u));
    }
    json j;
    j["name"] = c.name;
    j["seed"] = c.seed;
    j["policy"] = to_string(c.policy);
    j["geometry"] = {{"bs", pos(c.geometry.bs)},
                     {"ris", pos(c.geometry.ris)},
                     {"users", users},
                     {"placement",
                      {{"count", c.geometry.placement.count},
                       {"radius_min", c.geometry.placement.radius_min},
                       {"radius_max", c.geometry.placement.radius_max},
                       {"seed", c.geometry.placement.seed}}}};
    j["channel"] = {{"c0_db", c.path_loss.c0_db},
                    {"alpha_direct", c.path_loss.alpha_direct},
                    {"alpha_bs_ris", c.path_loss.alpha_bs_ris},
                    {"alpha_ris_user", c.path_loss.alpha_ris_user},
                    {"wavelength_m", c.wavelength_m},
                    {"element_spacing_wl", c.element_spacing_wl}};
    j["ris"] = {{"elements", c.ris_elements}, {"max_amp", c.env.max_amp}, {"kind", to_string(c.env.ris)}};
    j["noise"] = {{"receiver_w", c.env.noma.sigma_sq},
                  {"ris_dynamic_w", c.env.ris_noise.sigma_z_sq},
                  {"ris_static_w", c.env.ris_noise.sigma_s_sq}};
    j["noma"] = {{"mode", to_string(c.env.access)},
                 {"xi", c.env.noma.xi},
                 {"r0", c.env.noma.r0},
                 {"bandwidth_hz", c.env.noma.bandwidth_hz},
                 {"p_tx", c.env.noma.p_tx}};
    j["energy"] = {{"rf", {{"e_max", c.env.rf.e_max}, {"a", c.env.rf.a}, {"b", c.env.rf.b}}},
                   {"solar",
                    {{"s_sol", c.env.solar.s_sol},
                     {"a1", c.env.solar.a1},
                     {"a2", c.env.solar.a2},
                     {"a3", c.env.solar.a3},
                     {"sigma_sol", c.env.solar.sigma_sol},
                     {"random_cloud", c.env.random_cloud},
                     {"start_hour", c.env.start_hour}}},
                   {"slot_seconds", c.env.slot_seconds},
                   {"harvest_cap", c.env.harvest_cap},
                   {"e_max", c.env.e_max},
                   {"initial_battery", c.env.initial_battery},
                   {"eta", c.env.eta}};
    j["ucs"] = {{"initial", c.env.ucs_initial},
                {"max_step", c.env.walk.max_step},
                {"window", c.env.window},
                {"state_mode", to_string(c.env.state_mode)}};
    j["predictor"] = {{"enabled", c.use_predictor},
                      {"hidden", c.predictor.hidden},
                      {"layers", c.predictor.layers},
                      {"epochs", c.predictor.epochs},
                      {"batch_size", c.predictor.batch_size},
                      {"lr", c.predictor.lr},
                      {"lr_final", c.predictor.lr_final},
                      {"rho", c.predictor.rho},
                      {"validation_fraction", c.predictor.validation_fraction},
                      {"residual", c.predictor.residual},
                      {"seed", c.predictor.seed},
                      {"series_length", c.predictor_data.series_length},
                      {"split", c.predictor_data.split},
                      {"series_seed", c.predictor_data.series_seed}};
    j["ddpg"] = {{"hidden", c.ddpg.hidden},
                 {"actor_lr", c.ddpg.actor_lr},
                 {"critic_lr", c.ddpg.critic_lr},
                 {"tau", c.ddpg.tau},
                 {"gamma", c.ddpg.gamma},
                 {"batch", c.ddpg.batch},
                 {"memory", c.ddpg.memory},
                 {"noise_ini", c.ddpg.noise_ini},
                 {"noise_end", c.ddpg.noise_end},
                 {"noise_anneal_fraction", c.ddpg.noise_anneal_fraction},
                 {"reward_scale", c.ddpg.reward_scale}};
    j["reward"] = c.env.reward_unit;
    j["training"] = {{"episodes", c.episodes}, {"steps", c.steps}};
    j["evaluation"] = {{"episodes", c.eval_episodes}, {"first_episode", c.eval_first_episode}};
    j["sweep"] = {{"axis", c.sweep.axis}, {"values", c.sweep.values}, {"retrain", c.sweep.retrain}};
    j["output"] = {{"dir", c.output_dir}};
    return j.dump(2);
}

}  // namespace risnoma
