#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lrukit/init.hpp"
#include "lrukit/params.hpp"
#include "lrukit/recurrence.hpp"
#include "lrukit/rng.hpp"

namespace lrukit {

enum class Pooling { mean, last, none };
// full: (z W1 + b1) * sigmoid(z W2 + b2). half: z * sigmoid(z W2 + b2).
enum class GluVariant { full, half };

struct ModelConfig {
    std::size_t depth = 2;
    std::size_t H = 8;
    std::size_t N = 8;
    std::size_t input_dim = 1;
    std::size_t output_dim = 1;
    double dropout = 0.0;
    RingConfig ring{};
    Pooling pooling = Pooling::mean;
    GluVariant glu_variant = GluVariant::full;
    double b_scale = 2.0;
    bool phase_is_log = true;

    void validate() const;
};

struct BlockParams {
    LruParams lru;
    RowMatrix glu_w1;  // H x H, unused by GluVariant::half
    RowMatrix glu_w2;  // H x H
    Vector glu_b1;
    Vector glu_b2;
    Vector norm_scale;
    Vector norm_shift;
};

struct ModelParams {
    RowMatrix enc_w;  // input_dim x H
    Vector enc_b;
    std::vector<BlockParams> blocks;
    RowMatrix head_w;  // H x output_dim
    Vector head_b;
};

ModelParams model_init(const ModelConfig& cfg, Rng& rng);
ModelParams zeros_like(const ModelParams& p);
BlockParams zeros_like(const BlockParams& p);

std::vector<ParamView> param_views(BlockParams& p, const std::string& prefix = "");
std::vector<ParamView> param_views(ModelParams& p);

/// Activations saved by block_forward for the backward pass.
struct BlockCache {
    SequenceBatch input;
    SequenceBatch normed;       // LayerNorm output (LRU input)
    std::vector<double> xhat;   // normalized pre-affine values
    std::vector<double> inv_std;  // per (batch, time)
    LruOutput lru;
    RowMatrix gate_value;  // (B*L) x H
    RowMatrix gate_sig;    // (B*L) x H
    std::vector<double> mask;  // dropout multipliers, empty when inactive
};

constexpr double kLayerNormEps = 1e-5;

/// out = u + Dropout(GLU(LRU(LayerNorm(u)))).
SequenceBatch block_forward(const BlockParams& block, const ModelConfig& cfg, const SequenceBatch& u, bool train,
                            Rng& rng, BlockCache* cache = nullptr);

struct ModelCache {
    SequenceBatch input;
    SequenceBatch encoded;
    std::vector<BlockCache> blocks;
    SequenceBatch final_features;
};

/// encode -> blocks -> pool over time -> linear head. Output is (batch, 1, output_dim)
/// for mean/last pooling and (batch, L, output_dim) for Pooling::none.
SequenceBatch model_forward(const ModelConfig& cfg, const ModelParams& params, const SequenceBatch& u, bool train,
                            Rng& rng, ModelCache* cache = nullptr);

/// Flat little-endian float64 blob at `stem.bin` plus a JSON manifest at `stem.json`
/// listing each tensor's name, shape and element offset.
void save_checkpoint(ModelParams& params, const ModelConfig& cfg, const std::filesystem::path& stem);
ModelParams load_checkpoint(const ModelConfig& cfg, const std::filesystem::path& stem);

double max_abs_lambda(const ModelParams& params);

Pooling parse_pooling(const std::string& s);
GluVariant parse_glu_variant(const std::string& s);
std::string to_string(Pooling p);
std::string to_string(GluVariant g);

}  // namespace lrukit
