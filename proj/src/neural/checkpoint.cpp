#include "risnoma/neural/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>
#include <json.hpp>

#include "risnoma/errors.hpp"

namespace risnoma::nn {

using nlohmann::json;

std::string checkpoint_to_string(const ParamList& params, const std::string& meta_json) {
    json doc;
    doc["format"] = "risnoma.checkpoint";
    doc["version"] = kCheckpointVersion;
    doc["meta"] = json::parse(meta_json);
    json tensors = json::array();
    for (const auto& p : params) {
        json t;
        t["name"] = p.name;
        t["rows"] = p.value->rows();
        t["cols"] = p.value->cols();
        t["values"] = std::vector<double>(p.value->values().begin(), p.value->values().end());
        tensors.push_back(std::move(t));
    }
    doc["tensors"] = std::move(tensors);
    return doc.dump();
}

void load_checkpoint_string(const std::string& text, const ParamList& params) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("checkpoint: malformed JSON ({})", e.what()));
    }
    if (doc.value("format", "") != "risnoma.checkpoint") {
        throw ConfigError("checkpoint: not a risnoma checkpoint");
    }
    if (doc.value("version", 0) != kCheckpointVersion) {
        throw ConfigError(fmt::format("checkpoint: unsupported version {}", doc.value("version", 0)));
    }
    std::unordered_map<std::string, const json*> by_name;
    for (const auto& t : doc.at("tensors")) {
        by_name[t.at("name").get<std::string>()] = &t;
    }
    for (const auto& p : params) {
        const auto it = by_name.find(p.name);
        if (it == by_name.end()) {
            throw ConfigError(fmt::format("checkpoint: tensor '{}' missing", p.name));
        }
        const json& t = *it->second;
        const auto rows = t.at("rows").get<std::size_t>();
        const auto cols = t.at("cols").get<std::size_t>();
        if (rows != p.value->rows() || cols != p.value->cols()) {
            throw ConfigError(fmt::format("checkpoint: tensor '{}' is {}x{}, expected {}", p.name, rows, cols,
                                          p.value->shape_string()));
        }
        auto values = t.at("values").get<std::vector<double>>();
        *p.value = Tensor2(rows, cols, std::move(values));
    }
}

void save_checkpoint(const std::filesystem::path& path, const ParamList& params, const std::string& meta_json) {
    std::ofstream out(path);
    if (!out) {
        throw ConfigError(fmt::format("checkpoint: cannot write '{}'", path.string()));
    }
    out << checkpoint_to_string(params, meta_json) << '\n';
}

void load_checkpoint(const std::filesystem::path& path, const ParamList& params) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(fmt::format("checkpoint: cannot read '{}'", path.string()));
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    load_checkpoint_string(ss.str(), params);
}

}  // namespace risnoma::nn
