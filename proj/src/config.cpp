#include "fiberlab/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace fiberlab {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: bad numeric value for " + key + ": '" + value + "'");
    }
}

long long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer value for " + key + ": '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError("config: bad boolean value for " + key + ": '" + value + "'");
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(parse_double(key, item));
    }
    if (out.empty()) throw ConfigError("config: empty list for " + key);
    return out;
}

}  // namespace

void apply_config_entry(RunConfig& c, const std::string& key, const std::string& value) {
    if (key == "cutoff.kind") {
        if (value == "smoothstep")
            c.cutoff.kind = CutoffProfile::Kind::Smoothstep;
        else if (value == "sharp")
            c.cutoff.kind = CutoffProfile::Kind::Sharp;
        else
            throw ConfigError("config: cutoff.kind must be smoothstep or sharp, got '" + value +
                              "'");
    } else if (key == "cutoff.plateau_radius") {
        c.cutoff.plateau_radius = parse_double(key, value);
    } else if (key == "cutoff.support_radius") {
        c.cutoff.support_radius = parse_double(key, value);
    } else if (key == "grid.n_radial") {
        c.n_radial = static_cast<int>(parse_int(key, value));
    } else if (key == "grid.n_polar") {
        c.n_polar = static_cast<int>(parse_int(key, value));
    } else if (key == "grid.n_azimuthal") {
        c.n_azimuthal = static_cast<int>(parse_int(key, value));
    } else if (key == "fock.n_max") {
        c.n_max = static_cast<int>(parse_int(key, value));
    } else if (key == "fock.dimension_cap") {
        c.dimension_cap = static_cast<std::uint64_t>(parse_int(key, value));
    } else if (key == "alphas") {
        c.alphas = parse_double_list(key, value);
    } else if (key == "mc.n_samples") {
        c.mc_samples = parse_int(key, value);
    } else if (key == "mc.seed") {
        c.mc_seed = static_cast<std::uint64_t>(parse_int(key, value));
    } else if (key == "quadrature.resolution") {
        c.quadrature_resolution = static_cast<int>(parse_int(key, value));
    } else if (key == "solver.krylov_dim") {
        c.solver.krylov_dim = static_cast<int>(parse_int(key, value));
    } else if (key == "solver.max_restarts") {
        c.solver.max_restarts = static_cast<int>(parse_int(key, value));
    } else if (key == "solver.residual_tolerance") {
        c.solver.residual_tolerance = parse_double(key, value);
    } else if (key == "solver.seed") {
        c.solver.seed = static_cast<std::uint64_t>(parse_int(key, value));
    } else if (key == "solver.start_perturbation") {
        c.solver.start_perturbation = parse_double(key, value);
    } else if (key == "output.dir") {
        c.output_dir = value;
    } else if (key == "output.grid_csv") {
        c.output_grid_csv = parse_bool(key, value);
    } else if (key == "output.dump_vector") {
        c.output_dump_vector = parse_bool(key, value);
    } else if (key == "debug.break_transversality") {
        c.debug_break_transversality = parse_bool(key, value);
    } else {
        throw ConfigError("config: unknown key '" + key + "'");
    }
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig config;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) + " is not key = value");
        apply_config_entry(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return config;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

void apply_override(RunConfig& config, const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
        throw ConfigError("config: override must be key=value, got '" + kv + "'");
    apply_config_entry(config, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
}

std::string serialize_config(const RunConfig& c) {
    std::ostringstream os;
    char buf[256];
    os << "cutoff.kind = "
       << (c.cutoff.kind == CutoffProfile::Kind::Sharp ? "sharp" : "smoothstep") << "\n";
    std::snprintf(buf, sizeof(buf), "cutoff.plateau_radius = %.17g\n", c.cutoff.plateau_radius);
    os << buf;
    std::snprintf(buf, sizeof(buf), "cutoff.support_radius = %.17g\n", c.cutoff.support_radius);
    os << buf;
    os << "grid.n_radial = " << c.n_radial << "\n";
    os << "grid.n_polar = " << c.n_polar << "\n";
    os << "grid.n_azimuthal = " << c.n_azimuthal << "\n";
    os << "fock.n_max = " << c.n_max << "\n";
    os << "fock.dimension_cap = " << c.dimension_cap << "\n";
    os << "alphas = ";
    for (std::size_t i = 0; i < c.alphas.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%s%.17g", i ? ", " : "", c.alphas[i]);
        os << buf;
    }
    os << "\n";
    os << "mc.n_samples = " << c.mc_samples << "\n";
    os << "mc.seed = " << c.mc_seed << "\n";
    os << "quadrature.resolution = " << c.quadrature_resolution << "\n";
    os << "solver.krylov_dim = " << c.solver.krylov_dim << "\n";
    os << "solver.max_restarts = " << c.solver.max_restarts << "\n";
    std::snprintf(buf, sizeof(buf), "solver.residual_tolerance = %.17g\n",
                  c.solver.residual_tolerance);
    os << buf;
    os << "solver.seed = " << c.solver.seed << "\n";
    std::snprintf(buf, sizeof(buf), "solver.start_perturbation = %.17g\n",
                  c.solver.start_perturbation);
    os << buf;
    os << "output.dir = " << c.output_dir << "\n";
    os << "output.grid_csv = " << (c.output_grid_csv ? "true" : "false") << "\n";
    os << "output.dump_vector = " << (c.output_dump_vector ? "true" : "false") << "\n";
    os << "debug.break_transversality = " << (c.debug_break_transversality ? "true" : "false")
       << "\n";
    return os.str();
}

std::uint64_t config_hash(const RunConfig& config) {
    const std::string text = serialize_config(config);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace fiberlab
