#include "lrukit/model.hpp"

#include <utility>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace lrukit {

namespace {

RowMatrix zeros(const RowMatrix& m) { return RowMatrix::Zero(m.rows(), m.cols()); }
Vector zeros(const Vector& v) { return Vector::Zero(v.size()); }

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

MatrixMap flat(SequenceBatch& s) {
    return MatrixMap(s.data().data(), idx(s.batch() * s.length()), idx(s.features()));
}
ConstMatrixMap flat(const SequenceBatch& s) {
    return ConstMatrixMap(s.data().data(), idx(s.batch() * s.length()), idx(s.features()));
}

}  // namespace

void ModelConfig::validate() const {
    require(depth >= 1, "model: depth must be >= 1");
    require(H >= 1 && N >= 1, "model: H and N must be >= 1");
    require(input_dim >= 1 && output_dim >= 1, "model: input_dim and output_dim must be >= 1");
    require(dropout >= 0.0 && dropout < 1.0, "model: dropout must be in [0, 1)");
    require(b_scale > 0.0, "model: b_scale must be positive");
    ring.validate();
}

ModelParams model_init(const ModelConfig& cfg, Rng& rng) {
    cfg.validate();
    ModelParams p;
    Rng enc_rng = rng.split(0);
    Rng head_rng = rng.split(1);
    p.enc_w = glorot_real(cfg.input_dim, cfg.H, enc_rng);
    p.enc_b = Vector::Zero(idx(cfg.H));
    for (std::size_t i = 0; i < cfg.depth; ++i) {
        Rng block_rng = rng.split(100 + i);
        Rng lru_rng = block_rng.split(0);
        Rng glu_rng = block_rng.split(1);
        BlockParams b;
        b.lru = lru_init(cfg.ring, {cfg.H, cfg.N, cfg.H}, lru_rng, {cfg.b_scale, cfg.phase_is_log});
        b.glu_w1 = glorot_real(cfg.H, cfg.H, glu_rng);
        b.glu_w2 = glorot_real(cfg.H, cfg.H, glu_rng);
        b.glu_b1 = Vector::Zero(idx(cfg.H));
        b.glu_b2 = Vector::Zero(idx(cfg.H));
        b.norm_scale = Vector::Ones(idx(cfg.H));
        b.norm_shift = Vector::Zero(idx(cfg.H));
        p.blocks.push_back(std::move(b));
    }
    p.head_w = glorot_real(cfg.H, cfg.output_dim, head_rng);
    p.head_b = Vector::Zero(idx(cfg.output_dim));
    return p;
}

BlockParams zeros_like(const BlockParams& p) {
    return {zeros_like(p.lru), zeros(p.glu_w1), zeros(p.glu_w2), zeros(p.glu_b1),
            zeros(p.glu_b2),   zeros(p.norm_scale), zeros(p.norm_shift)};
}

ModelParams zeros_like(const ModelParams& p) {
    ModelParams z;
    z.enc_w = zeros(p.enc_w);
    z.enc_b = zeros(p.enc_b);
    for (const auto& b : p.blocks) z.blocks.push_back(zeros_like(b));
    z.head_w = zeros(p.head_w);
    z.head_b = zeros(p.head_b);
    return z;
}

std::vector<ParamView> param_views(BlockParams& p, const std::string& prefix) {
    std::vector<ParamView> v = {
        make_view(prefix + "norm_scale", p.norm_scale, ParamGroup::general),
        make_view(prefix + "norm_shift", p.norm_shift, ParamGroup::general),
    };
    for (auto& lv : param_views(p.lru, prefix + "lru.")) v.push_back(std::move(lv));
    v.push_back(make_view(prefix + "glu_w1", p.glu_w1, ParamGroup::general));
    v.push_back(make_view(prefix + "glu_w2", p.glu_w2, ParamGroup::general));
    v.push_back(make_view(prefix + "glu_b1", p.glu_b1, ParamGroup::general));
    v.push_back(make_view(prefix + "glu_b2", p.glu_b2, ParamGroup::general));
    return v;
}

std::vector<ParamView> param_views(ModelParams& p) {
    std::vector<ParamView> v = {
        make_view("enc_w", p.enc_w, ParamGroup::general),
        make_view("enc_b", p.enc_b, ParamGroup::general),
    };
    for (std::size_t i = 0; i < p.blocks.size(); ++i) {
        for (auto& bv : param_views(p.blocks[i], "blocks." + std::to_string(i) + ".")) v.push_back(std::move(bv));
    }
    v.push_back(make_view("head_w", p.head_w, ParamGroup::general));
    v.push_back(make_view("head_b", p.head_b, ParamGroup::general));
    return v;
}

SequenceBatch block_forward(const BlockParams& block, const ModelConfig& cfg, const SequenceBatch& u, bool train,
                            Rng& rng, BlockCache* cache) {
    require(u.features() == cfg.H, "block_forward: feature dim must equal H");
    require(block.lru.input_dim() == cfg.H && block.lru.output_dim() == cfg.H, "block_forward: LRU must map H -> H");
    const std::size_t rows = u.batch() * u.length();
    const std::size_t h = cfg.H;

    // Per-timestep layer normalization.
    SequenceBatch normed(u.batch(), u.length(), h);
    std::vector<double> xhat(rows * h);
    std::vector<double> inv_std(rows);
    const double* in = u.data().data();
    double* out_n = normed.data().data();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = in + r * h;
        double mean = 0.0;
        for (std::size_t f = 0; f < h; ++f) mean += row[f];
        mean /= static_cast<double>(h);
        double var = 0.0;
        for (std::size_t f = 0; f < h; ++f) var += (row[f] - mean) * (row[f] - mean);
        var /= static_cast<double>(h);
        const double is = 1.0 / std::sqrt(var + kLayerNormEps);
        inv_std[r] = is;
        for (std::size_t f = 0; f < h; ++f) {
            const double xh = (row[f] - mean) * is;
            xhat[r * h + f] = xh;
            out_n[r * h + f] = xh * block.norm_scale[idx(f)] + block.norm_shift[idx(f)];
        }
    }

    LruOutput lru = lru_forward(block.lru, normed);

    const ConstMatrixMap z = flat(std::as_const(lru.y));
    RowMatrix value;
    if (cfg.glu_variant == GluVariant::full) {
        value = z * block.glu_w1;
        value.rowwise() += block.glu_b1.transpose();
    } else {
        value = z;
    }
    RowMatrix sig = z * block.glu_w2;
    sig.rowwise() += block.glu_b2.transpose();
    sig = (1.0 + (-sig.array()).exp()).inverse().matrix();

    SequenceBatch out = u;
    MatrixMap o = flat(out);
    RowMatrix gated = value.cwiseProduct(sig);
    std::vector<double> mask;
    if (train && cfg.dropout > 0.0) {
        mask.resize(rows * h);
        const double keep_scale = 1.0 / (1.0 - cfg.dropout);
        for (auto& m : mask) m = rng.uniform() >= cfg.dropout ? keep_scale : 0.0;
        gated.array() *= Eigen::Map<const RowMatrix>(mask.data(), idx(rows), idx(h)).array();
    }
    o += gated;

    if (cache) {
        cache->input = u;
        cache->normed = std::move(normed);
        cache->xhat = std::move(xhat);
        cache->inv_std = std::move(inv_std);
        cache->lru = std::move(lru);
        cache->gate_value = std::move(value);
        cache->gate_sig = std::move(sig);
        cache->mask = std::move(mask);
    }
    return out;
}

SequenceBatch model_forward(const ModelConfig& cfg, const ModelParams& params, const SequenceBatch& u, bool train,
                            Rng& rng, ModelCache* cache) {
    cfg.validate();
    require(params.blocks.size() == cfg.depth, "model_forward: block count does not match depth");
    require(u.features() == cfg.input_dim, "model_forward: input features do not match input_dim");
    require(u.length() >= 1, "model_forward: empty sequence");
    if (!u.all_finite()) throw InvalidInput("model_forward: non-finite input");

    SequenceBatch h(u.batch(), u.length(), cfg.H);
    MatrixMap hm = flat(h);
    hm.noalias() = flat(u) * params.enc_w;
    hm.rowwise() += params.enc_b.transpose();
    if (cache) {
        cache->input = u;
        cache->encoded = h;
        cache->blocks.assign(cfg.depth, BlockCache{});
    }
    for (std::size_t i = 0; i < cfg.depth; ++i) {
        Rng block_rng = rng.split(i);
        h = block_forward(params.blocks[i], cfg, h, train, block_rng, cache ? &cache->blocks[i] : nullptr);
    }

    SequenceBatch pooled;
    switch (cfg.pooling) {
        case Pooling::none: pooled = h; break;
        case Pooling::mean:
            pooled = SequenceBatch(h.batch(), 1, cfg.H);
            for (std::size_t b = 0; b < h.batch(); ++b) {
                pooled.sequence(b).row(0) = h.sequence(b).colwise().mean();
            }
            break;
        case Pooling::last:
            pooled = SequenceBatch(h.batch(), 1, cfg.H);
            for (std::size_t b = 0; b < h.batch(); ++b) {
                pooled.sequence(b).row(0) = h.sequence(b).row(idx(h.length() - 1));
            }
            break;
    }
    SequenceBatch y(pooled.batch(), pooled.length(), cfg.output_dim);
    MatrixMap ym = flat(y);
    ym.noalias() = flat(pooled) * params.head_w;
    ym.rowwise() += params.head_b.transpose();
    if (cache) cache->final_features = std::move(h);
    return y;
}

double max_abs_lambda(const ModelParams& params) {
    double m = 0.0;
    for (const auto& b : params.blocks) m = std::max(m, b.lru.max_abs_lambda());
    return m;
}

void save_checkpoint(ModelParams& params, const ModelConfig& cfg, const std::filesystem::path& stem) {
    auto views = param_views(params);
    nlohmann::json manifest;
    manifest["format"] = "lrukit-params-v1";
    manifest["dtype"] = "float64";
    manifest["endianness"] = "little";
    manifest["config"] = {{"depth", cfg.depth},           {"H", cfg.H},
                          {"N", cfg.N},                   {"input_dim", cfg.input_dim},
                          {"output_dim", cfg.output_dim}, {"glu_variant", to_string(cfg.glu_variant)},
                          {"phase_is_log", cfg.phase_is_log}};
    nlohmann::json tensors = nlohmann::json::array();
    std::size_t offset = 0;
    std::filesystem::path bin = stem;
    bin += ".bin";
    std::ofstream out(bin, std::ios::binary);
    if (!out) throw InvalidInput("save_checkpoint: cannot open " + bin.string());
    for (const auto& v : views) {
        tensors.push_back({{"name", v.name}, {"shape", v.shape}, {"offset", offset}});
        for (double x : v.values) {
            std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
            if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
            out.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
        }
        offset += v.values.size();
    }
    manifest["tensors"] = tensors;
    manifest["total"] = offset;
    std::filesystem::path js = stem;
    js += ".json";
    std::ofstream mf(js);
    if (!mf) throw InvalidInput("save_checkpoint: cannot open " + js.string());
    mf << manifest.dump(2) << "\n";
}

ModelParams load_checkpoint(const ModelConfig& cfg, const std::filesystem::path& stem) {
    std::filesystem::path js = stem;
    js += ".json";
    std::ifstream mf(js);
    if (!mf) throw InvalidInput("load_checkpoint: cannot open " + js.string());
    const nlohmann::json manifest = nlohmann::json::parse(mf);
    require(manifest.value("format", "") == "lrukit-params-v1", "load_checkpoint: unknown format");

    Rng rng(0);
    ModelParams params = model_init(cfg, rng);
    auto views = param_views(params);
    const auto& tensors = manifest.at("tensors");
    require(tensors.size() == views.size(), "load_checkpoint: tensor count does not match config");

    std::filesystem::path bin = stem;
    bin += ".bin";
    std::ifstream in(bin, std::ios::binary);
    if (!in) throw InvalidInput("load_checkpoint: cannot open " + bin.string());
    for (std::size_t i = 0; i < views.size(); ++i) {
        require(tensors[i].at("name").get<std::string>() == views[i].name, "load_checkpoint: tensor name mismatch");
        require(tensors[i].at("shape").get<std::vector<std::size_t>>() == views[i].shape,
                "load_checkpoint: shape mismatch for " + views[i].name);
        in.seekg(static_cast<std::streamoff>(tensors[i].at("offset").get<std::size_t>() * sizeof(double)));
        for (double& x : views[i].values) {
            std::uint64_t bits = 0;
            in.read(reinterpret_cast<char*>(&bits), sizeof(bits));
            if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
            x = std::bit_cast<double>(bits);
        }
        require(static_cast<bool>(in), "load_checkpoint: truncated blob");
    }
    return params;
}

Pooling parse_pooling(const std::string& s) {
    if (s == "mean") return Pooling::mean;
    if (s == "last") return Pooling::last;
    if (s == "none") return Pooling::none;
    throw InvalidInput("unknown pooling '" + s + "' (expected mean|last|none)");
}

GluVariant parse_glu_variant(const std::string& s) {
    if (s == "full") return GluVariant::full;
    if (s == "half") return GluVariant::half;
    throw InvalidInput("unknown glu_variant '" + s + "' (expected full|half)");
}

std::string to_string(Pooling p) {
    switch (p) {
        case Pooling::mean: return "mean";
        case Pooling::last: return "last";
        case Pooling::none: return "none";
    }
    return "mean";
}

std::string to_string(GluVariant g) { return g == GluVariant::full ? "full" : "half"; }

}  // namespace lrukit
