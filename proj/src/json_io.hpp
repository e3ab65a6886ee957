#pragma once

#include <fstream>
#include <string>

#include "json.hpp"
#include "levelset/netcore.hpp"

namespace levelset::detail {

using json = nlohmann::json;

inline json arch_to_json(const ArchSpec& arch) {
    json acts = json::array();
    for (Activation a : arch.activations) acts.push_back(std::string(to_string(a)));
    return {{"layer_sizes", arch.layer_sizes}, {"activation", acts}, {"use_bias", arch.use_bias}};
}

inline ArchSpec arch_from_json(const json& j) {
    ArchSpec arch;
    arch.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
    const auto hidden = arch.layer_sizes.size() >= 2 ? arch.layer_sizes.size() - 2 : 0;
    const json& act = j.at("activation");
    if (act.is_string()) {
        arch.activations.assign(hidden, parse_activation(act.get<std::string>()));
    } else {
        for (const auto& a : act) arch.activations.push_back(parse_activation(a.get<std::string>()));
    }
    arch.use_bias = j.at("use_bias").get<bool>();
    arch.validate();
    return arch;
}

inline json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Vector vector_from_json(const json& j) {
    const auto raw = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(raw.data(), static_cast<Eigen::Index>(raw.size()));
}

inline void write_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << j.dump(2) << '\n';
    if (!out) throw Error("failed writing '" + path + "'");
}

inline json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error("malformed JSON in '" + path + "': " + e.what());
    }
}

}  // namespace levelset::detail
