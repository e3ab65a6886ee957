#include "json_io.hpp"
#include "levelset/netcore.hpp"

namespace levelset {

void save_checkpoint(const std::string& path, const ParamVector& params, const CheckpointMeta& meta) {
    const detail::json j = {
        {"arch", detail::arch_to_json(params.arch())},
        {"values", detail::vector_to_json(params.values())},
        {"meta", {{"seed", meta.seed}, {"final_loss", meta.final_loss}, {"created", meta.created}}},
    };
    detail::write_json(path, j);
}

Checkpoint load_checkpoint(const std::string& path) {
    const detail::json j = detail::read_json(path);
    try {
        Checkpoint c;
        c.params = ParamVector(detail::arch_from_json(j.at("arch")), detail::vector_from_json(j.at("values")));
        if (!c.params.all_finite()) throw Error("checkpoint '" + path + "' contains non-finite values");
        if (j.contains("meta")) {
            const auto& m = j.at("meta");
            c.meta.seed = m.value("seed", std::uint64_t{0});
            c.meta.final_loss = m.value("final_loss", 0.0);
            c.meta.created = m.value("created", std::string{});
        }
        return c;
    } catch (const detail::json::exception& e) {
        throw Error("bad checkpoint '" + path + "': " + e.what());
    }
}

}  // namespace levelset
