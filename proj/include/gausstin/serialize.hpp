#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "gausstin/conditioning.hpp"
#include "gausstin/errors.hpp"
#include "gausstin/gmm.hpp"
#include "gausstin/learner.hpp"
#include "gausstin/metrics.hpp"
#include "gausstin/replay.hpp"
#include "gausstin/stream.hpp"

namespace gausstin {

namespace jsonw {

// Decimal rendering with 17 significant digits; parses back to the same double.
inline void number(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

inline void string(std::string& out, std::string_view s) {
    out += '"';
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    out += '"';
}

inline void vector(std::string& out, const std::vector<double>& v) {
    out += '[';
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        number(out, v[i]);
    }
    out += ']';
}

}  // namespace jsonw

namespace detail {

inline nlohmann::json parse_document(const std::string& text, const char* what) {
    nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw ParseError(0, std::string(what) + ": malformed JSON");
    return doc;
}

inline double finite_number(const nlohmann::json& v, const char* what, std::size_t line = 0) {
    if (!v.is_number()) throw ParseError(line, std::string(what) + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ParseError(line, std::string(what) + ": non-finite number");
    return x;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path + "'");
    out << content;
}

}  // namespace detail

// ---- Gaussian mixture: {dim, components:[{weight, mean, variances}]} ----

inline std::string mixture_to_json(const GaussianMixture& gmm) {
    std::string out = "{\"dim\":" + std::to_string(gmm.dim) + ",\"components\":[";
    for (std::size_t k = 0; k < gmm.components.size(); ++k) {
        const auto& c = gmm.components[k];
        if (k) out += ',';
        out += "{\"weight\":";
        jsonw::number(out, c.weight);
        out += ",\"mean\":";
        jsonw::vector(out, c.mean);
        out += ",\"variances\":";
        jsonw::vector(out, c.variances);
        out += '}';
    }
    out += "]}";
    return out;
}

inline GaussianMixture mixture_from_json(const std::string& text) {
    const nlohmann::json doc = detail::parse_document(text, "mixture");
    if (!doc.is_object() || !doc.contains("dim") || !doc.contains("components"))
        throw ParseError(0, "mixture: expected {dim, components}");
    GaussianMixture gmm;
    gmm.dim = doc.at("dim").get<std::size_t>();
    for (const auto& cj : doc.at("components")) {
        GaussianComponent c;
        c.weight = detail::finite_number(cj.at("weight"), "mixture weight");
        for (const auto& v : cj.at("mean")) c.mean.push_back(detail::finite_number(v, "mixture mean"));
        for (const auto& v : cj.at("variances"))
            c.variances.push_back(detail::finite_number(v, "mixture variance"));
        if (c.mean.size() != gmm.dim || c.variances.size() != gmm.dim)
            throw DimensionMismatch("mixture: component length differs from dim");
        gmm.components.push_back(std::move(c));
    }
    if (gmm.components.empty()) throw ParseError(0, "mixture: no components");
    gmm.converged = true;
    return gmm;
}

// ---- Task stream: UTF-8 JSONL, one sample per line ----

inline std::string sample_to_json(const Sample& s, Category category) {
    std::string out = "{\"task\":";
    jsonw::string(out, s.task_id);
    out += ",\"category\":";
    jsonw::string(out, category_name(category));
    out += ",\"split\":";
    jsonw::string(out, s.split == Split::Train ? "train" : "eval");
    out += ",\"id\":";
    jsonw::string(out, s.sample_id);
    out += ",\"label\":" + std::to_string(s.label);
    out += ",\"x\":";
    jsonw::vector(out, s.features);
    out += '}';
    return out;
}

inline void write_stream(const TaskStream& stream, const std::string& path) {
    std::string out;
    for (const TaskDataset& task : stream.tasks) {
        for (const Sample& s : task.train) out += sample_to_json(s, task.category) + "\n";
        for (const Sample& s : task.eval) out += sample_to_json(s, task.category) + "\n";
    }
    detail::write_file(path, out);
}

inline TaskStream load_stream(const std::string& path, std::size_t k) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");

    static const std::set<std::string> kKeys = {"task", "category", "split", "id", "label", "x"};

    TaskStream stream;
    std::map<std::string, std::size_t> task_index;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
        if (rec.is_discarded()) throw ParseError(line_no, "malformed JSON record");
        if (!rec.is_object()) throw ParseError(line_no, "record is not an object");
        for (const auto& [key, value] : rec.items())
            if (!kKeys.count(key)) throw ParseError(line_no, "unknown field '" + key + "'");
        for (const std::string& key : kKeys)
            if (!rec.contains(key)) throw ParseError(line_no, "missing field '" + key + "'");
        if (!rec["task"].is_string() || !rec["category"].is_string() || !rec["split"].is_string() ||
            !rec["id"].is_string())
            throw ParseError(line_no, "task, category, split and id must be strings");
        if (!rec["label"].is_number_unsigned())
            throw ParseError(line_no, "label must be a non-negative integer");
        if (!rec["x"].is_array()) throw ParseError(line_no, "x must be an array");

        Sample s;
        s.task_id = rec["task"].get<std::string>();
        s.sample_id = rec["id"].get<std::string>();
        s.label = rec["label"].get<int>();
        const std::string split = rec["split"].get<std::string>();
        if (split == "train")
            s.split = Split::Train;
        else if (split == "eval")
            s.split = Split::Eval;
        else
            throw ParseError(line_no, "split must be 'train' or 'eval'");
        Category category;
        try {
            category = category_from_name(rec["category"].get<std::string>());
        } catch (const UnknownCategory& e) {
            throw UnknownCategory("line " + std::to_string(line_no) + ": " + e.what());
        }
        for (const auto& v : rec["x"])
            s.features.push_back(detail::finite_number(v, "x", line_no));

        if (stream.dim == 0 && stream.tasks.empty()) stream.dim = s.features.size();
        if (s.features.size() != stream.dim)
            throw DimensionMismatch("line " + std::to_string(line_no) + ": vector length " +
                                    std::to_string(s.features.size()) + " differs from " +
                                    std::to_string(stream.dim));

        auto [it, inserted] = task_index.try_emplace(s.task_id, stream.tasks.size());
        if (inserted) {
            TaskDataset task;
            task.task_id = s.task_id;
            task.category = category;
            stream.tasks.push_back(std::move(task));
        }
        TaskDataset& task = stream.tasks[it->second];
        if (task.category != category)
            throw ParseError(line_no, "task '" + s.task_id + "' changes category");
        stream.class_count = std::max(stream.class_count, s.label + 1);
        (s.split == Split::Train ? task.train : task.eval).push_back(std::move(s));
    }

    if (stream.tasks.empty()) throw ParseError(0, "stream file contains no records");
    for (const TaskDataset& task : stream.tasks) {
        if (task.train.empty())
            throw ParseError(0, "task '" + task.task_id + "' has no train samples");
        if (task.eval.empty()) throw ParseError(0, "task '" + task.task_id + "' has no eval samples");
    }
    if (k < 1 || k > stream.tasks.size())
        throw KOutOfRange("k = " + std::to_string(k) + " outside [1, " +
                          std::to_string(stream.tasks.size()) + "]");
    stream.labeled_prefix_k = k;
    return stream;
}

// ---- Model checkpoint: {dim, classes, weights row-major, bias} ----

inline std::string model_to_json(const SoftmaxModel& m) {
    std::string out = "{\"dim\":" + std::to_string(m.input_dim) +
                      ",\"classes\":" + std::to_string(m.classes) + ",\"weights\":";
    jsonw::vector(out, m.weights);
    out += ",\"bias\":";
    jsonw::vector(out, m.bias);
    out += '}';
    return out;
}

inline SoftmaxModel model_from_json(const std::string& text) {
    const nlohmann::json doc = detail::parse_document(text, "model");
    SoftmaxModel m;
    m.input_dim = doc.at("dim").get<std::size_t>();
    m.classes = doc.at("classes").get<int>();
    for (const auto& v : doc.at("weights"))
        m.weights.push_back(detail::finite_number(v, "model weight"));
    for (const auto& v : doc.at("bias")) m.bias.push_back(detail::finite_number(v, "model bias"));
    if (m.weights.size() != m.input_dim * static_cast<std::size_t>(m.classes) ||
        m.bias.size() != static_cast<std::size_t>(m.classes))
        throw DimensionMismatch("model: weight/bias shape mismatch");
    return m;
}

// ---- Descriptor bank: JSON map task_id -> unit vector ----

inline std::string descriptors_to_json(const std::vector<TaskDescriptor>& bank) {
    std::string out = "{";
    for (std::size_t i = 0; i < bank.size(); ++i) {
        if (i) out += ',';
        jsonw::string(out, bank[i].task_id);
        out += ':';
        jsonw::vector(out, bank[i].vector);
    }
    out += '}';
    return out;
}

// ---- Exemplar audit records (buffer snapshots): JSONL ----

inline std::string exemplar_to_json(const Exemplar& e, std::size_t stage) {
    std::string out = "{\"stage\":" + std::to_string(stage) + ",\"task\":";
    jsonw::string(out, e.source_task);
    out += ",\"label\":" + std::to_string(e.label);
    out += ",\"method\":";
    jsonw::string(out, exemplar_method_name(e.method));
    out += ",\"score\":";
    jsonw::number(out, e.score);
    out += ",\"x\":";
    jsonw::vector(out, e.features);
    out += '}';
    return out;
}

// ---- Run records: one completed run with its accuracy matrix ----

inline std::string run_record_to_json(const RunRecord& r,
                                      const std::vector<std::string>& task_order) {
    std::string out = "{\"strategy\":";
    jsonw::string(out, r.strategy);
    out += ",\"k\":" + std::to_string(r.k);
    out += ",\"seed\":" + std::to_string(r.seed);
    out += ",\"tasks\":" + std::to_string(r.matrix.tasks);
    out += ",\"trained_tasks\":" + std::to_string(r.matrix.trained_tasks);
    out += ",\"first_k\":" + std::to_string(r.matrix.first_k);
    out += ",\"task_order\":[";
    for (std::size_t i = 0; i < task_order.size(); ++i) {
        if (i) out += ',';
        jsonw::string(out, task_order[i]);
    }
    out += "],\"rows\":[";
    for (std::size_t i = 0; i < r.matrix.rows.size(); ++i) {
        if (i) out += ',';
        jsonw::vector(out, r.matrix.rows[i]);
    }
    out += "]}";
    return out;
}

inline RunRecord run_record_from_json(const std::string& text) {
    const nlohmann::json doc = detail::parse_document(text, "run record");
    RunRecord r;
    r.strategy = doc.at("strategy").get<std::string>();
    r.k = doc.at("k").get<std::size_t>();
    r.seed = doc.at("seed").get<std::uint64_t>();
    r.matrix.tasks = doc.at("tasks").get<std::size_t>();
    r.matrix.trained_tasks = doc.at("trained_tasks").get<std::size_t>();
    r.matrix.first_k = doc.at("first_k").get<std::size_t>();
    for (const auto& row : doc.at("rows")) {
        std::vector<double> values;
        for (const auto& v : row) values.push_back(detail::finite_number(v, "matrix entry"));
        r.matrix.rows.push_back(std::move(values));
    }
    return r;
}

}  // namespace gausstin
