#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "cfverse/bsp.hpp"
#include "cfverse/graph_multiverse.hpp"
#include "cfverse/vector_multiverse.hpp"

// JSON documents exchanged by the CLI and the navigation service.
namespace cfverse::io {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// {"origin": [...], "steps": [[...], ...]}
Json to_json(const vec::Path& p);
vec::Path path_from_json(const Json& j);
// {"origin": [...], "o": n, "points": [[...], ...]}
Json to_json(const vec::NormalizedPath& p);

Json to_json(const graph::GraphPath& p);
graph::GraphPath graph_path_from_json(const Json& j);
Json to_json(const graph::CounterfactualReport& r);
Json to_json(const std::vector<graph::CounterfactualReport>& reports);

// {"schema_version", "vertices", "arcs": [{"from","to","weight"}], "k", "lambda",
//  "t", "target_class", "candidates", "instances", "vertex_class"}
Json to_json(const graph::MultiverseGraph& g);
graph::MultiverseGraph graph_from_json(const Json& j);

// Writes via a temporary sibling and renames, so failures leave no partial file.
void write_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);
Json read_json(const std::filesystem::path& path);

}  // namespace cfverse::io
