#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ddcp/cvae.hpp"
#include "ddcp/dataset.hpp"
#include "ddcp/grid.hpp"

namespace ddcp {

// Run configuration: strict structured text (JSON), unknown keys rejected,
// defaults at paper scale. The desk-scale preset (8x8x4 grid, halved widths)
// is applied by flag.
struct RunConfig {
    GridConfig grid;  // defaults M=N=32, L=6, F=11

    struct Data {
        std::size_t count = 1000;
        std::uint64_t base_seed = 20260801;
        std::size_t train_count = 800;
        std::uint64_t split_seed = 4242;
        double pdp_decay = 1.5;
        ScenarioRanges scenario;
    } data;

    struct Model {
        CondMode mode = CondMode::Observation;
        std::size_t latent_dim = 48;
        int flow_blocks = 4;
        std::vector<std::size_t> encoder_hidden{256, 128};
        std::vector<std::size_t> decoder_hidden{128, 256};
        std::vector<std::size_t> prior_hidden{64};
        int beta_warmup_epochs = 10;
        int predict_samples = 16;
    } model;

    struct Train {
        int epochs = 50;
        int batch = 16;
        double lr = 1e-3;
        std::uint64_t seed = 7;
        int recurrent_unroll = 4;
        std::size_t recurrent_hidden = 64;
    } train;

    struct Sweep {
        std::string axis = "doppler";
        std::vector<double> doppler_points_hz{500,  1000, 1500, 2000, 2500,
                                              3000, 3500, 4000, 4500, 5000};
        int delta = 1;
        std::vector<int> horizon_points{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
        double fixed_doppler_hz = 2000.0;
        std::size_t eval_count = 200;
        std::uint64_t seed = 99;
        std::vector<std::string> predictors{"cvae", "simplified-recurrent", "stale", "ar1",
                                            "zero"};
    } sweep;

    int threads = 1;

    void validate() const;  // throws UsageError

    ModelConfig model_config() const;
    GenOptions gen_options() const;
};

// Defaults overlaid with the JSON object; unknown keys anywhere are a
// UsageError, unreadable or unparseable files a FormatError.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

// M=N=8, L=4, F=11, halved network widths.
void apply_desk_scale(RunConfig& cfg);

// Canonical predictor label ("recurrent" aliases "simplified-recurrent").
std::string canonical_predictor(const std::string& name);

}  // namespace ddcp
