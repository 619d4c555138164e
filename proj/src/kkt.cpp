#include "optpot/kkt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

namespace optpot {

namespace {

enum class CellState { Lower, Free, Cap };

struct CellData {
    std::vector<double> up;
    std::vector<double> dpsi;
    std::vector<CellState> state;
};

CellData classify(const Grid& grid, const PsiSpec& spec, const CellField& mu, const NodalField& u,
                  const NodalField& p) {
    require_same_grid(grid, spec.grid(), "kkt");
    require_same_grid(grid, mu.grid(), "kkt");
    const CellField pair = node_pair_to_cell(grid, u, p);
    const double inv_area = 1.0 / grid.cell_area();
    const double band = 1e-9 * spec.mu_max();
    const auto nu = spec.nu().values();

    CellData data;
    data.up.resize(mu.size());
    data.dpsi.resize(mu.size());
    data.state.resize(mu.size());
    for (std::size_t c = 0; c < mu.size(); ++c) {
        data.up[c] = pair[c] * inv_area;
        data.dpsi[c] = psi_density_prime(spec, std::max(mu[c], 0.0));
        if (mu[c] <= nu[c] + band) {
            data.state[c] = CellState::Lower;
        } else if (mu[c] >= spec.mu_max() - band) {
            data.state[c] = CellState::Cap;
        } else {
            data.state[c] = CellState::Free;
        }
    }
    return data;
}

double fit_multiplier(const CellData& data, double psi) {
    if (psi < 1.0 - kBudgetTolerance) return 0.0;
    double num = 0.0, den = 0.0;
    for (std::size_t c = 0; c < data.up.size(); ++c) {
        if (data.state[c] != CellState::Free) continue;
        num += data.up[c] * data.dpsi[c];
        den += data.dpsi[c] * data.dpsi[c];
    }
    if (den == 0.0) return 0.0;
    return std::max(0.0, num / den);
}

}  // namespace

double estimate_multiplier(const Grid& grid, const PsiSpec& spec, const CellField& mu, const NodalField& u,
                           const NodalField& p) {
    const CellData data = classify(grid, spec, mu, u, p);
    return fit_multiplier(data, capacity_psi(grid, spec, mu));
}

KKTReport kkt_report(const Grid& grid, const PsiSpec& spec, const CellField& mu, const NodalField& u,
                     const NodalField& p) {
    const CellData data = classify(grid, spec, mu, u, p);
    KKTReport r;
    r.psi = capacity_psi(grid, spec, mu);
    r.multiplier = fit_multiplier(data, r.psi);
    r.complementarity = std::abs(r.multiplier * (r.psi - 1.0));

    for (double v : data.up) r.up_scale = std::max(r.up_scale, std::abs(v));
    const double scale = r.up_scale > 0.0 ? r.up_scale : 1.0;

    for (std::size_t c = 0; c < data.up.size(); ++c) {
        const double lam_dpsi = r.multiplier * data.dpsi[c];
        switch (data.state[c]) {
            case CellState::Free:
                ++r.free_cells;
                r.stationarity = std::max(r.stationarity, std::abs(lam_dpsi - data.up[c]) / scale);
                break;
            case CellState::Lower:
                ++r.lower_cells;
                r.inequality = std::max(r.inequality, std::max(0.0, data.up[c] - lam_dpsi) / scale);
                break;
            case CellState::Cap:
                ++r.cap_cells;
                if (spec.is_exponential()) r.cap_set = std::max(r.cap_set, std::max(0.0, data.up[c]) / scale);
                break;
        }
    }
    return r;
}

std::string to_key_value(const KKTReport& r) {
    std::string out;
    char line[128];
    const auto put = [&](const char* key, double value) {
        std::snprintf(line, sizeof line, "%s=%.17g\n", key, value);
        out += line;
    };
    const auto put_count = [&](const char* key, std::size_t value) {
        std::snprintf(line, sizeof line, "%s=%zu\n", key, value);
        out += line;
    };
    put("multiplier", r.multiplier);
    put("psi", r.psi);
    put("complementarity", r.complementarity);
    put("stationarity", r.stationarity);
    put("inequality", r.inequality);
    put("cap_set", r.cap_set);
    put("up_scale", r.up_scale);
    put_count("free_cells", r.free_cells);
    put_count("lower_cells", r.lower_cells);
    put_count("cap_cells", r.cap_cells);
    return out;
}

}  // namespace optpot
