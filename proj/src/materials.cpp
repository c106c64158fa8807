#include "xpf/materials.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "xpf/errors.hpp"

#ifndef XPF_DATA_DIR_DEFAULT
#define XPF_DATA_DIR_DEFAULT "data"
#endif

namespace xpf {

std::string_view to_string(Material m) {
    switch (m) {
    case Material::air:
        return "air";
    case Material::soft_tissue:
        return "soft_tissue";
    case Material::bone:
        return "bone";
    case Material::metal:
        return "metal";
    }
    return "unknown";
}

LabelVolume decompose_materials(const Volume& v) {
    LabelVolume out;
    out.dims = v.dims();
    out.labels.assign(v.size() + 4, 0);
    auto vals = v.values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
        out.labels[i] = static_cast<std::uint8_t>(classify_hu(vals[i]));
    }
    return out;
}

double AttenuationTable::at(double e) const {
    if (energy_keV.empty() || !(e >= energy_keV.front() && e <= energy_keV.back())) {
        throw InvalidArgument("energy " + std::to_string(e) + " keV outside attenuation table");
    }
    const auto hi = std::lower_bound(energy_keV.begin(), energy_keV.end(), e);
    const std::size_t j = static_cast<std::size_t>(hi - energy_keV.begin());
    if (energy_keV[j] == e) {
        return mu_over_rho_cm2_g[j];
    }
    const std::size_t i = j - 1;
    const double t = std::log(e / energy_keV[i]) / std::log(energy_keV[j] / energy_keV[i]);
    return std::exp(std::log(mu_over_rho_cm2_g[i]) + t * (std::log(mu_over_rho_cm2_g[j]) - std::log(mu_over_rho_cm2_g[i])));
}

double DensityMap::operator()(float hu_value, Material m) const {
    if (m == Material::metal) {
        return metal_density;
    }
    const double h = hu_value;
    if (h <= hu.front()) {
        return density.front();
    }
    // The last segment extends linearly past the final knot (dense bone).
    std::size_t j = 1;
    while (j + 1 < hu.size() && h > hu[j]) {
        ++j;
    }
    const double t = (h - hu[j - 1]) / (hu[j] - hu[j - 1]);
    return density[j - 1] + t * (density[j] - density[j - 1]);
}

void MaterialModel::validate() const {
    if (spectrum.empty()) {
        throw InvalidArgument("spectrum has no bins");
    }
    double total = 0.0;
    for (const auto& b : spectrum) {
        if (!(b.weight >= 0.0)) {
            throw InvalidArgument("spectrum weights must be nonnegative");
        }
        total += b.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw InvalidArgument("spectrum weights sum to " + std::to_string(total) + ", expected 1");
    }
    auto check_table = [](const AttenuationTable& t, std::string_view name) {
        if (t.energy_keV.size() < 2 || t.energy_keV.size() != t.mu_over_rho_cm2_g.size()) {
            throw InvalidArgument("attenuation table " + std::string(name) + " malformed");
        }
        for (std::size_t i = 0; i < t.energy_keV.size(); ++i) {
            if (!(t.mu_over_rho_cm2_g[i] > 0.0)) {
                throw InvalidArgument("attenuation table " + std::string(name) + " must be strictly positive");
            }
            if (i > 0 && !(t.energy_keV[i] > t.energy_keV[i - 1])) {
                throw InvalidArgument("attenuation table " + std::string(name) + " energies must increase");
            }
            if (i > 0 && !(t.mu_over_rho_cm2_g[i] < t.mu_over_rho_cm2_g[i - 1])) {
                throw InvalidArgument("attenuation table " + std::string(name) + " must decrease with energy");
            }
        }
    };
    for (Material m : kMaterials) {
        check_table(table(m), to_string(m));
    }
    check_table(water, "water");
    for (const auto& b : spectrum) {
        for (Material m : kMaterials) {
            table(m).at(b.energy_keV);
        }
    }
}

MaterialModel MaterialModel::with_single_bin(double energy_keV) const {
    MaterialModel out = *this;
    out.spectrum = {{energy_keV, 1.0}};
    return out;
}

std::filesystem::path resolve_data_dir(const std::filesystem::path& explicit_dir) {
    if (!explicit_dir.empty()) {
        return explicit_dir;
    }
    if (const char* env = std::getenv("XPF_DATA_DIR"); env && *env) {
        return env;
    }
    return XPF_DATA_DIR_DEFAULT;
}

namespace {

std::vector<std::pair<double, double>> read_two_column_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    std::vector<std::pair<double, double>> rows;
    std::string line;
    int line_no = 0;
    bool header_allowed = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected two columns");
        }
        const bool first = header_allowed;
        header_allowed = false;
        try {
            rows.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            if (first) {
                continue;  // header
            }
            throw IoError(path.string() + ":" + std::to_string(line_no) + ": not a number");
        }
    }
    return rows;
}

} // namespace

std::vector<SpectrumBin> load_spectrum_csv(const std::filesystem::path& path) {
    std::vector<SpectrumBin> bins;
    for (auto [e, w] : read_two_column_csv(path)) {
        bins.push_back({e, w});
    }
    return bins;
}

AttenuationTable load_attenuation_csv(const std::filesystem::path& path) {
    AttenuationTable t;
    for (auto [e, mu] : read_two_column_csv(path)) {
        t.energy_keV.push_back(e);
        t.mu_over_rho_cm2_g.push_back(mu);
    }
    return t;
}

MaterialModel load_material_model(const std::filesystem::path& data_dir) {
    MaterialModel m;
    m.spectrum = load_spectrum_csv(data_dir / "spectrum_90kvp.csv");
    for (Material mat : kMaterials) {
        m.mu_over_rho[static_cast<int>(mat)] = load_attenuation_csv(data_dir / ("mu_" + std::string(to_string(mat)) + ".csv"));
    }
    m.water = load_attenuation_csv(data_dir / "mu_water.csv");
    m.validate();
    return m;
}

std::vector<float> density_grid(const Volume& v, const LabelVolume& labels, const DensityMap& map) {
    auto vals = v.values();
    std::vector<float> out(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) {
        out[i] = static_cast<float>(map(vals[i], labels.at(i)));
    }
    return out;
}

} // namespace xpf
