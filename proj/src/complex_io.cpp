#include "cosimo/complex.hpp"

#include "cosimo/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace cosimo {

using nlohmann::json;

std::string complex_to_json(const SimplicialComplex& complex) {
    json j;
    j["vertices"] = complex.vertices();
    j["edges"] = complex.edges();
    j["triangles"] = complex.triangles();
    if (complex.positions()) j["positions"] = *complex.positions();
    else j["positions"] = nullptr;
    return j.dump(2) + "\n";
}

SimplicialComplex complex_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("complex: ") + e.what()});
    }
    std::vector<std::string> issues;
    for (const char* key : {"vertices", "edges", "triangles"})
        if (!j.contains(key) || !j[key].is_array()) issues.push_back(std::string("/") + key + ": expected an array");
    if (!issues.empty()) throw ConfigError(issues);
    try {
        const auto vertices = j["vertices"].get<std::vector<Vertex>>();
        const auto edges = j["edges"].get<std::vector<Edge>>();
        const auto triangles = j["triangles"].get<std::vector<Triangle>>();
        std::optional<std::vector<Point2>> positions;
        if (j.contains("positions") && !j["positions"].is_null()) positions = j["positions"].get<std::vector<Point2>>();
        return build_complex(edges, triangles, vertices, std::move(positions));
    } catch (const json::exception& e) {
        throw ConfigError({std::string("complex: ") + e.what()});
    }
}

void save_complex(const SimplicialComplex& complex, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << complex_to_json(complex);
}

SimplicialComplex load_complex(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return complex_from_json(buf.str());
}

}  // namespace cosimo
