#pragma once

#include <string>

#include <json.hpp>

#include "ddfilt/noise_spectrum.hpp"

namespace ddfilt::cli {

// Subcommands take fully resolved parameters (what the manifest records),
// write their outputs plus a manifest, and throw on failure.
void run_ofdd(const nlohmann::json& params);
void run_curves(const nlohmann::json& params);
void run_calibrate(const nlohmann::json& params);
void run_oracle(const nlohmann::json& params);

void dispatch(const std::string& subcommand, const nlohmann::json& params);

// Re-runs a manifest; a non-empty out_dir redirects every output there.
void replay(const std::string& manifest_path, const std::string& out_dir);

// {"kind", "alpha", "gamma", "cutoff", "omega_low", "file"} with presets
// for ohmic / one-over-f / ambient filled in.
nlohmann::json resolve_spectrum(const std::string& kind, double alpha, double gamma,
                                const std::string& cutoff, double omega_low);
NoiseSpectrum spectrum_from_json(const nlohmann::json& j, double omega_d = 1.0);

}  // namespace ddfilt::cli
