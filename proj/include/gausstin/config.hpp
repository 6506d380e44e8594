#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gausstin/errors.hpp"
#include "gausstin/serialize.hpp"
#include "gausstin/stream.hpp"
#include "gausstin/trainer.hpp"

namespace gausstin {

/// Where the task stream comes from: a JSONL file when path is set, otherwise
/// the synthetic generator.
struct StreamConfig {
    std::string path;
    SynthSpec synth;
};

struct FullConfig {
    StreamConfig stream;
    ExperimentConfig experiment;
};

namespace detail {

struct TomlValue {
    enum class Kind { String, Integer, Float, Bool } kind = Kind::String;
    std::string text;
    long long integer = 0;
    double number = 0.0;
    bool flag = false;
    std::size_t line = 0;
};

using TomlTable = std::map<std::string, std::map<std::string, TomlValue>>;

inline std::string strip(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

// Minimal TOML subset: [section] headers and scalar key = value pairs, where
// values are quoted strings, integers, floats or booleans.
inline TomlTable parse_toml(std::istream& in) {
    TomlTable table;
    std::string section;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        // cut comments, respecting quoted strings
        bool in_string = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') in_string = !in_string;
            if (line[i] == '#' && !in_string) {
                line = line.substr(0, i);
                break;
            }
        }
        line = strip(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(line_no) + ": unterminated section header");
            section = strip(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError("line " + std::to_string(line_no) + ": empty section name");
            table.try_emplace(section);
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = strip(line.substr(0, eq));
        const std::string raw = strip(line.substr(eq + 1));
        if (key.empty() || raw.empty())
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");

        TomlValue value;
        value.line = line_no;
        if (raw.front() == '"') {
            if (raw.size() < 2 || raw.back() != '"')
                throw ConfigError("line " + std::to_string(line_no) + ": unterminated string");
            value.kind = TomlValue::Kind::String;
            value.text = raw.substr(1, raw.size() - 2);
        } else if (raw == "true" || raw == "false") {
            value.kind = TomlValue::Kind::Bool;
            value.flag = raw == "true";
        } else {
            std::size_t used = 0;
            try {
                if (raw.find_first_of(".eE") == std::string::npos) {
                    value.integer = std::stoll(raw, &used);
                    value.kind = TomlValue::Kind::Integer;
                    value.number = static_cast<double>(value.integer);
                } else {
                    value.number = std::stod(raw, &used);
                    value.kind = TomlValue::Kind::Float;
                }
            } catch (const std::exception&) {
                throw ConfigError("line " + std::to_string(line_no) + ": bad value '" + raw + "'");
            }
            if (used != raw.size())
                throw ConfigError("line " + std::to_string(line_no) + ": bad value '" + raw + "'");
        }
        if (!table[section].emplace(key, std::move(value)).second)
            throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    return table;
}

class ConfigReader {
  public:
    explicit ConfigReader(const TomlTable& table) : table_(table) {}

    bool has(const std::string& section, const std::string& key) const {
        auto s = table_.find(section);
        return s != table_.end() && s->second.count(key);
    }

    template <typename F>
    void take(const std::string& section, const std::string& key, F&& apply) {
        auto s = table_.find(section);
        if (s == table_.end()) return;
        auto v = s->second.find(key);
        if (v == s->second.end()) return;
        apply(v->second);
        consumed_[section].insert(key);
    }

    void finish(const std::vector<std::string>& known_sections) const {
        for (const auto& [section, keys] : table_) {
            bool known = false;
            for (const auto& name : known_sections) known = known || name == section;
            if (!known) throw ConfigError("unknown section [" + section + "]");
            for (const auto& [key, value] : keys) {
                auto c = consumed_.find(section);
                if (c == consumed_.end() || !c->second.count(key))
                    throw ConfigError("line " + std::to_string(value.line) + ": unknown key '" +
                                      section + "." + key + "'");
            }
        }
    }

  private:
    const TomlTable& table_;
    std::map<std::string, std::set<std::string>> consumed_;
};

inline long long as_integer(const TomlValue& v, const std::string& name) {
    if (v.kind != TomlValue::Kind::Integer)
        throw ConfigError("line " + std::to_string(v.line) + ": " + name + " must be an integer");
    return v.integer;
}

inline double as_number(const TomlValue& v, const std::string& name) {
    if (v.kind != TomlValue::Kind::Float && v.kind != TomlValue::Kind::Integer)
        throw ConfigError("line " + std::to_string(v.line) + ": " + name + " must be a number");
    return v.number;
}

inline std::string as_string(const TomlValue& v, const std::string& name) {
    if (v.kind != TomlValue::Kind::String)
        throw ConfigError("line " + std::to_string(v.line) + ": " + name + " must be a string");
    return v.text;
}

inline bool as_bool(const TomlValue& v, const std::string& name) {
    if (v.kind != TomlValue::Kind::Bool)
        throw ConfigError("line " + std::to_string(v.line) + ": " + name + " must be true or false");
    return v.flag;
}

inline std::size_t as_count(const TomlValue& v, const std::string& name) {
    const long long x = as_integer(v, name);
    if (x < 0) throw ConfigError("line " + std::to_string(v.line) + ": " + name + " must be >= 0");
    return static_cast<std::size_t>(x);
}

}  // namespace detail

inline FullConfig parse_config(std::istream& in) {
    const detail::TomlTable table = detail::parse_toml(in);
    detail::ConfigReader reader(table);

    FullConfig cfg;
    cfg.stream.synth.seed = 1;  // stream identity stays fixed while run seeds vary

    using detail::as_bool;
    using detail::as_count;
    using detail::as_integer;
    using detail::as_number;
    using detail::as_string;
    using detail::TomlValue;

    reader.take("stream", "path", [&](const TomlValue& v) { cfg.stream.path = as_string(v, "path"); });
    reader.take("stream", "tasks",
                [&](const TomlValue& v) { cfg.stream.synth.tasks = as_count(v, "tasks"); });
    reader.take("stream", "classes_per_task", [&](const TomlValue& v) {
        cfg.stream.synth.classes_per_task = as_count(v, "classes_per_task");
    });
    reader.take("stream", "dim", [&](const TomlValue& v) { cfg.stream.synth.dim = as_count(v, "dim"); });
    reader.take("stream", "train_per_class", [&](const TomlValue& v) {
        cfg.stream.synth.train_per_class = as_count(v, "train_per_class");
    });
    reader.take("stream", "eval_per_class", [&](const TomlValue& v) {
        cfg.stream.synth.eval_per_class = as_count(v, "eval_per_class");
    });
    reader.take("stream", "separation", [&](const TomlValue& v) {
        cfg.stream.synth.separation = as_number(v, "separation");
    });
    reader.take("stream", "noise",
                [&](const TomlValue& v) { cfg.stream.synth.noise = as_number(v, "noise"); });
    reader.take("stream", "conflicting", [&](const TomlValue& v) {
        cfg.stream.synth.conflicting = as_bool(v, "conflicting");
    });
    reader.take("stream", "seed", [&](const TomlValue& v) {
        cfg.stream.synth.seed = static_cast<std::uint64_t>(as_integer(v, "seed"));
    });

    reader.take("gmm", "components", [&](const TomlValue& v) {
        cfg.experiment.gmm.n_components = as_count(v, "components");
    });
    reader.take("gmm", "max_iterations", [&](const TomlValue& v) {
        cfg.experiment.gmm.max_iterations = as_count(v, "max_iterations");
    });
    reader.take("gmm", "rel_tolerance", [&](const TomlValue& v) {
        cfg.experiment.gmm.rel_tolerance = as_number(v, "rel_tolerance");
    });
    reader.take("gmm", "cov_floor", [&](const TomlValue& v) {
        cfg.experiment.gmm.cov_floor = as_number(v, "cov_floor");
    });
    reader.take("gmm", "init", [&](const TomlValue& v) {
        const std::string name = as_string(v, "init");
        if (name == "kmeans++")
            cfg.experiment.gmm.init_method = InitMethod::KmeansPP;
        else if (name == "random-points")
            cfg.experiment.gmm.init_method = InitMethod::RandomPoints;
        else
            throw ConfigError("line " + std::to_string(v.line) + ": init must be 'kmeans++' or 'random-points'");
    });

    reader.take("buffer", "capacity_per_task", [&](const TomlValue& v) {
        cfg.experiment.buffer_capacity = as_count(v, "capacity_per_task");
    });
    reader.take("buffer", "m_per_class", [&](const TomlValue& v) {
        cfg.experiment.m_per_class = as_count(v, "m_per_class");
    });
    reader.take("buffer", "alpha",
                [&](const TomlValue& v) { cfg.experiment.alpha = as_number(v, "alpha"); });

    reader.take("train", "learning_rate", [&](const TomlValue& v) {
        cfg.experiment.train.learning_rate = as_number(v, "learning_rate");
    });
    reader.take("train", "epochs", [&](const TomlValue& v) {
        cfg.experiment.train.epochs = static_cast<int>(as_integer(v, "epochs"));
    });
    reader.take("train", "batch_size", [&](const TomlValue& v) {
        cfg.experiment.train.batch_size = as_count(v, "batch_size");
        if (cfg.experiment.train.batch_size < 1)
            throw ConfigError("line " + std::to_string(v.line) + ": batch_size must be >= 1");
    });

    reader.take("experiment", "k",
                [&](const TomlValue& v) { cfg.experiment.k = as_count(v, "k"); });
    reader.take("experiment", "strategy", [&](const TomlValue& v) {
        cfg.experiment.strategy = strategy_from_name(as_string(v, "strategy"));
    });
    reader.take("experiment", "seed", [&](const TomlValue& v) {
        cfg.experiment.seed = static_cast<std::uint64_t>(as_integer(v, "seed"));
    });
    reader.take("experiment", "repetitions", [&](const TomlValue& v) {
        cfg.experiment.repetitions = as_count(v, "repetitions");
    });
    reader.take("experiment", "p_dim",
                [&](const TomlValue& v) { cfg.experiment.p_dim = as_count(v, "p_dim"); });
    reader.take("experiment", "held_out_tasks", [&](const TomlValue& v) {
        cfg.experiment.held_out_tasks = as_count(v, "held_out_tasks");
    });
    reader.take("experiment", "pseudo_labels", [&](const TomlValue& v) {
        cfg.experiment.pseudo_labels = as_bool(v, "pseudo_labels");
    });

    reader.finish({"stream", "gmm", "buffer", "train", "experiment"});
    return cfg;
}

inline FullConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    return parse_config(in);
}

/// Stream per the config: loaded from disk when a path is set, synthesized
/// otherwise. k comes from the experiment section.
inline TaskStream resolve_stream(const FullConfig& cfg) {
    if (!cfg.stream.path.empty()) return load_stream(cfg.stream.path, cfg.experiment.k);
    SynthSpec spec = cfg.stream.synth;
    spec.labeled_prefix_k = cfg.experiment.k;
    return synth_stream(spec);
}

/// Canonical one-line rendering of the resolved configuration; its hash
/// identifies a run setup in manifests.
inline std::string canonical_config_string(const FullConfig& cfg) {
    std::ostringstream out;
    const ExperimentConfig& e = cfg.experiment;
    out << "stream.path=" << cfg.stream.path << ";stream.tasks=" << cfg.stream.synth.tasks
        << ";stream.classes_per_task=" << cfg.stream.synth.classes_per_task
        << ";stream.dim=" << cfg.stream.synth.dim
        << ";stream.train_per_class=" << cfg.stream.synth.train_per_class
        << ";stream.eval_per_class=" << cfg.stream.synth.eval_per_class
        << ";stream.separation=" << cfg.stream.synth.separation
        << ";stream.noise=" << cfg.stream.synth.noise
        << ";stream.conflicting=" << cfg.stream.synth.conflicting
        << ";stream.seed=" << cfg.stream.synth.seed << ";gmm.components=" << e.gmm.n_components
        << ";gmm.max_iterations=" << e.gmm.max_iterations
        << ";gmm.rel_tolerance=" << e.gmm.rel_tolerance << ";gmm.cov_floor=" << e.gmm.cov_floor
        << ";gmm.init=" << (e.gmm.init_method == InitMethod::KmeansPP ? "kmeans++" : "random-points")
        << ";buffer.capacity=" << e.buffer_capacity << ";buffer.m_per_class=" << e.m_per_class
        << ";buffer.alpha=" << e.alpha << ";train.learning_rate=" << e.train.learning_rate
        << ";train.epochs=" << e.train.epochs << ";train.batch_size=" << e.train.batch_size
        << ";experiment.k=" << e.k << ";experiment.strategy=" << strategy_name(e.strategy)
        << ";experiment.seed=" << e.seed << ";experiment.repetitions=" << e.repetitions
        << ";experiment.p_dim=" << e.p_dim << ";experiment.held_out_tasks=" << e.held_out_tasks
        << ";experiment.pseudo_labels=" << e.pseudo_labels;
    return out.str();
}

}  // namespace gausstin
