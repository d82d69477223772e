#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "lrukit/model.hpp"

using namespace lrukit;

namespace {

SequenceBatch random_batch(std::size_t b, std::size_t l, std::size_t f, Rng& rng) {
    SequenceBatch u(b, l, f);
    for (auto& v : u.data()) v = rng.normal();
    return u;
}

ModelConfig small_config() {
    ModelConfig cfg;
    cfg.depth = 2;
    cfg.H = 8;
    cfg.N = 8;
    cfg.input_dim = 3;
    cfg.output_dim = 5;
    cfg.ring = RingConfig{0.5, 0.99};
    return cfg;
}

double max_diff(const SequenceBatch& a, const SequenceBatch& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

void silence_block(BlockParams& b) {
    b.lru.c_re.setZero();
    b.lru.c_im.setZero();
    b.lru.d.setZero();
    b.glu_b1.setZero();
    b.glu_b2.setZero();
}

}  // namespace

TEST_SUITE("model") {
    TEST_CASE("block with a silent LRU path is the identity") {
        const ModelConfig cfg = small_config();
        Rng rng(1);
        ModelParams params = model_init(cfg, rng);
        BlockParams block = params.blocks[0];
        silence_block(block);
        const SequenceBatch u = random_batch(2, 7, cfg.H, rng);
        Rng drop(2);
        CHECK(max_diff(block_forward(block, cfg, u, false, drop), u) == 0.0);
    }

    TEST_CASE("dropout zero makes train and eval agree") {
        ModelConfig cfg = small_config();
        cfg.dropout = 0.0;
        Rng rng(3);
        const ModelParams params = model_init(cfg, rng);
        const SequenceBatch u = random_batch(2, 16, 3, rng);
        Rng a(4), b(5);
        CHECK(max_diff(model_forward(cfg, params, u, true, a), model_forward(cfg, params, u, false, b)) == 0.0);
    }

    TEST_CASE("config validation and output shapes") {
        ModelConfig bad = small_config();
        bad.depth = 0;
        CHECK_THROWS_AS(bad.validate(), InvalidInput);
        bad = small_config();
        bad.dropout = 1.0;
        CHECK_THROWS_AS(bad.validate(), InvalidInput);

        ModelConfig cfg = small_config();
        Rng rng(6);
        const ModelParams params = model_init(cfg, rng);
        const SequenceBatch u = random_batch(4, 16, 3, rng);
        Rng r(0);
        const SequenceBatch y = model_forward(cfg, params, u, false, r);
        CHECK(y.batch() == 4);
        CHECK(y.length() == 1);
        CHECK(y.features() == 5);
        cfg.pooling = Pooling::none;
        const SequenceBatch seq = model_forward(cfg, params, u, false, r);
        CHECK(seq.length() == 16);
        CHECK_THROWS_AS(model_forward(cfg, params, random_batch(1, 4, 2, rng), false, r), InvalidInput);
    }

    TEST_CASE("silencing every block reduces the model to head(pool(encode(u)))") {
        const ModelConfig cfg = small_config();
        Rng rng(7);
        ModelParams params = model_init(cfg, rng);
        for (auto& b : params.blocks) silence_block(b);
        const SequenceBatch u = random_batch(2, 6, 3, rng);
        Rng r(0);
        const SequenceBatch y = model_forward(cfg, params, u, false, r);
        for (std::size_t b = 0; b < 2; ++b) {
            Eigen::RowVectorXd pooled = Eigen::RowVectorXd::Zero(8);
            for (std::size_t k = 0; k < 6; ++k) {
                Eigen::RowVectorXd uk(3);
                uk << u.at(b, k, 0), u.at(b, k, 1), u.at(b, k, 2);
                pooled += uk * params.enc_w + params.enc_b.transpose();
            }
            pooled /= 6.0;
            const Eigen::RowVectorXd want = pooled * params.head_w + params.head_b.transpose();
            for (std::size_t o = 0; o < 5; ++o) CHECK(y.at(b, 0, o) == doctest::Approx(want[static_cast<Eigen::Index>(o)]));
        }
    }

    TEST_CASE("with a memoryless recurrence the model is position-wise") {
        ModelConfig cfg = small_config();
        cfg.pooling = Pooling::none;
        Rng rng(8);
        ModelParams params = model_init(cfg, rng);
        for (auto& b : params.blocks) {
            b.lru.nu_log.setConstant(50.0);
            b.lru.gamma_log.setZero();
        }
        const SequenceBatch u = random_batch(1, 10, 3, rng);
        SequenceBatch rev(1, 10, 3);
        for (std::size_t k = 0; k < 10; ++k) {
            for (std::size_t f = 0; f < 3; ++f) rev.at(0, k, f) = u.at(0, 9 - k, f);
        }
        Rng r(0);
        const SequenceBatch y = model_forward(cfg, params, u, false, r);
        const SequenceBatch yr = model_forward(cfg, params, rev, false, r);
        for (std::size_t k = 0; k < 10; ++k) {
            for (std::size_t o = 0; o < 5; ++o) CHECK(yr.at(0, k, o) == doctest::Approx(y.at(0, 9 - k, o)).epsilon(1e-12));
        }
    }

    TEST_CASE("inverted dropout preserves the expectation") {
        ModelConfig cfg = small_config();
        cfg.H = 4;
        cfg.N = 4;
        cfg.dropout = 0.1;
        Rng rng(9);
        const ModelParams params = model_init(cfg, rng);
        const BlockParams& block = params.blocks[0];
        const SequenceBatch u = random_batch(1, 4, 4, rng);
        Rng eval_rng(0);
        const SequenceBatch eval = block_forward(block, cfg, u, false, eval_rng);
        std::vector<double> mean(u.size(), 0.0);
        const int draws = 10000;
        Rng root(10);
        for (int d = 0; d < draws; ++d) {
            Rng r = root.split(static_cast<std::uint64_t>(d));
            const SequenceBatch out = block_forward(block, cfg, u, true, r);
            for (std::size_t i = 0; i < out.size(); ++i) mean[i] += out.data()[i] - u.data()[i];
        }
        double scale = 0.0, err = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double branch = eval.data()[i] - u.data()[i];
            scale = std::max(scale, std::abs(branch));
            err = std::max(err, std::abs(mean[i] / draws - branch));
        }
        CHECK(err / scale < 0.01);
    }

    TEST_CASE("GLU variants differ only by the value projection") {
        ModelConfig cfg = small_config();
        Rng rng(11);
        ModelParams params = model_init(cfg, rng);
        BlockParams block = params.blocks[0];
        block.glu_w1.setIdentity();
        block.glu_b1.setZero();
        const SequenceBatch u = random_batch(2, 5, cfg.H, rng);
        Rng r(0);
        const SequenceBatch full = block_forward(block, cfg, u, false, r);
        cfg.glu_variant = GluVariant::half;
        const SequenceBatch half = block_forward(block, cfg, u, false, r);
        CHECK(max_diff(full, half) < 1e-14);
    }

    TEST_CASE("checkpoint round trip") {
        const ModelConfig cfg = small_config();
        Rng rng(12);
        ModelParams params = model_init(cfg, rng);
        const auto dir = std::filesystem::temp_directory_path() / "lrukit_ckpt_test";
        std::filesystem::create_directories(dir);
        save_checkpoint(params, cfg, dir / "model");
        CHECK(std::filesystem::file_size(dir / "model.bin") == total_size(param_views(params)) * sizeof(double));
        ModelParams loaded = load_checkpoint(cfg, dir / "model");
        const auto a = param_views(params), b = param_views(loaded);
        REQUIRE(a.size() == b.size());
        for (std::size_t t = 0; t < a.size(); ++t) {
            CHECK(a[t].name == b[t].name);
            CHECK(std::equal(a[t].values.begin(), a[t].values.end(), b[t].values.begin()));
        }
        ModelConfig other = cfg;
        other.H = 4;
        CHECK_THROWS_AS(load_checkpoint(other, dir / "model"), InvalidInput);
        std::filesystem::remove_all(dir);
    }

    TEST_CASE("initialization is deterministic and stable") {
        const ModelConfig cfg = small_config();
        Rng a(13), b(13);
        ModelParams p = model_init(cfg, a), q = model_init(cfg, b);
        const auto va = param_views(p), vb = param_views(q);
        for (std::size_t t = 0; t < va.size(); ++t) {
            CHECK(std::equal(va[t].values.begin(), va[t].values.end(), vb[t].values.begin()));
        }
        CHECK(max_abs_lambda(p) < 0.99 + 1e-12);
    }

    TEST_CASE("string parsing") {
        CHECK(parse_pooling("mean") == Pooling::mean);
        CHECK(parse_pooling("last") == Pooling::last);
        CHECK(parse_pooling("none") == Pooling::none);
        CHECK(to_string(Pooling::last) == "last");
        CHECK(parse_glu_variant("half") == GluVariant::half);
        CHECK_THROWS_AS(parse_pooling("max"), InvalidInput);
        CHECK_THROWS_AS(parse_glu_variant("gelu"), InvalidInput);
    }
}
