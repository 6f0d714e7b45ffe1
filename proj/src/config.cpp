#include "sfl/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

namespace sfl {

namespace {

using nlohmann::json;

const std::set<std::string> kKnownKeys{"potential", "path",        "start",        "r",
                                       "band_grid", "edge_margin", "r_nodes",      "texp_steps",
                                       "truncation_N", "theta_points", "xi_tolerance", "output"};

double number(const json& value, const std::string& key) {
    if (!value.is_number()) throw ConfigError("config: '" + key + "' must be a number");
    const double x = value.get<double>();
    if (!std::isfinite(x)) throw ConfigError("config: '" + key + "' must be finite");
    return x;
}

int integer(const json& value, const std::string& key) {
    if (!value.is_number_integer()) throw ConfigError("config: '" + key + "' must be an integer");
    return value.get<int>();
}

int site_key(const std::string& key) {
    int site = 0;
    const char* first = key.data();
    const char* last = key.data() + key.size();
    auto [ptr, ec] = std::from_chars(first, last, site);
    if (key.empty() || ec != std::errc() || ptr != last)
        throw ConfigError("config: site key '" + key + "' is not an integer");
    return site;
}

}  // namespace

std::vector<double> BandGrid::values() const {
    std::vector<double> out(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i)
        out[static_cast<std::size_t>(i)] = points == 1 ? min : min + (max - min) * i / (points - 1);
    return out;
}

LatticePotential parse_potential(const json& object) {
    if (!object.is_object()) throw ConfigError("config: potential must be an object of site -> coupling");
    std::map<int, double> couplings;
    for (const auto& [key, value] : object.items()) {
        const int site = site_key(key);
        const double c = number(value, "potential[" + key + "]");
        if (c == 0.0) throw ConfigError("config: zero coupling at site " + key);
        if (!couplings.emplace(site, c).second) throw ConfigError("config: duplicate site " + key);
    }
    return LatticePotential(couplings);
}

json potential_to_json(const LatticePotential& v) {
    json out = json::object();
    for (const auto& [site, c] : v.couplings()) out[std::to_string(site)] = c;
    return out;
}

ExperimentConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");
    for (const auto& [key, value] : doc.items())
        if (!kKnownKeys.count(key)) throw ConfigError("config: unknown key '" + key + "'");

    ExperimentConfig cfg;
    cfg.echo = doc;

    if (doc.contains("potential") == doc.contains("path"))
        throw ConfigError("config: exactly one of 'potential' or 'path' is required");
    LatticePotential start;
    if (doc.contains("start")) start = parse_potential(doc["start"]);
    cfg.vertices.push_back(start);
    if (doc.contains("potential")) {
        cfg.vertices.push_back(parse_potential(doc["potential"]));
    } else {
        const json& path = doc["path"];
        if (!path.is_array() || path.empty()) throw ConfigError("config: 'path' must be a non-empty array");
        for (const json& vertex : path) cfg.vertices.push_back(parse_potential(vertex));
    }
    if (doc.contains("r")) {
        const double r = number(doc["r"], "r");
        for (auto& v : cfg.vertices) v = v * r;
    }

    if (doc.contains("edge_margin")) {
        cfg.edge_margin = number(doc["edge_margin"], "edge_margin");
        if (cfg.edge_margin <= 0.0 || cfg.edge_margin >= 1.0)
            throw ConfigError("config: edge_margin must lie in (0, 1)");
    }
    if (doc.contains("band_grid")) {
        const json& g = doc["band_grid"];
        if (!g.is_object()) throw ConfigError("config: band_grid must be an object");
        for (const auto& [key, value] : g.items())
            if (key != "min" && key != "max" && key != "points")
                throw ConfigError("config: unknown band_grid key '" + key + "'");
        if (g.contains("min")) cfg.band_grid.min = number(g["min"], "band_grid.min");
        if (g.contains("max")) cfg.band_grid.max = number(g["max"], "band_grid.max");
        if (g.contains("points")) cfg.band_grid.points = integer(g["points"], "band_grid.points");
    }
    const BandGrid& grid = cfg.band_grid;
    if (grid.points < 1) throw ConfigError("config: band_grid.points must be positive");
    if (grid.max < grid.min || (grid.points == 1 && grid.max != grid.min))
        throw ConfigError("config: band_grid must satisfy min <= max (min == max for one point)");
    const double edge = 2.0 - cfg.edge_margin;
    if (!(grid.min > -edge && grid.max < edge))
        throw ConfigError("config: band_grid must lie inside (-2 + edge_margin, 2 - edge_margin)");

    if (doc.contains("r_nodes")) cfg.r_nodes = integer(doc["r_nodes"], "r_nodes");
    if (cfg.r_nodes < 2) throw ConfigError("config: r_nodes must be >= 2");
    if (doc.contains("texp_steps")) cfg.texp_steps = integer(doc["texp_steps"], "texp_steps");
    if (cfg.texp_steps < static_cast<int>(cfg.vertices.size() - 1))
        throw ConfigError("config: texp_steps must cover every path segment");
    if (doc.contains("truncation_N")) cfg.truncation_N = integer(doc["truncation_N"], "truncation_N");
    if (cfg.truncation_N < 3 || cfg.truncation_N % 2 == 0)
        throw ConfigError("config: truncation_N must be an odd integer >= 3");
    if (doc.contains("theta_points")) cfg.theta_points = integer(doc["theta_points"], "theta_points");
    if (cfg.theta_points < 1) throw ConfigError("config: theta_points must be positive");
    if (doc.contains("xi_tolerance")) {
        cfg.xi_tolerance = number(doc["xi_tolerance"], "xi_tolerance");
        if (cfg.xi_tolerance <= 0.0) throw ConfigError("config: xi_tolerance must be positive");
    }

    if (doc.contains("output")) {
        const json& o = doc["output"];
        if (!o.is_object()) throw ConfigError("config: output must be an object");
        for (const auto& [key, value] : o.items())
            if (key != "format" && key != "path") throw ConfigError("config: unknown output key '" + key + "'");
        if (o.contains("format")) {
            if (!o["format"].is_string()) throw ConfigError("config: output.format must be a string");
            const std::string f = o["format"].get<std::string>();
            if (f == "csv")
                cfg.format = OutputFormat::csv;
            else if (f == "json")
                cfg.format = OutputFormat::json;
            else
                throw ConfigError("config: output.format must be csv or json");
        }
        if (o.contains("path")) {
            if (!o["path"].is_string()) throw ConfigError("config: output.path must be a string");
            cfg.output_path = o["path"].get<std::string>();
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("config: cannot open " + file);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return parse_config(doc);
}

}  // namespace sfl
