#include "wavlink/errors.hpp"
#include "wavlink/gradcheck.hpp"
#include "wavlink/loss.hpp"
#include "wavlink/ops.hpp"
#include "wavlink/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace wavlink;

namespace {

// random unit-row batch
TensorPtr unit_batch(Rng& rng, int b, int d) {
    std::vector<double> data(static_cast<size_t>(b) * d);
    for (int i = 0; i < b; ++i) {
        double sq = 0.0;
        for (int j = 0; j < d; ++j) {
            data[static_cast<size_t>(i) * d + j] = rng.gaussian();
            sq += data[static_cast<size_t>(i) * d + j] * data[static_cast<size_t>(i) * d + j];
        }
        const double n = std::sqrt(sq);
        for (int j = 0; j < d; ++j) data[static_cast<size_t>(i) * d + j] /= n;
    }
    return make_tensor({b, d}, std::move(data));
}

TensorPtr identical_rows(int b, int d) {
    std::vector<double> row(d, 0.0);
    row[0] = 0.6;
    row[1] = 0.8;
    std::vector<double> data;
    for (int i = 0; i < b; ++i) data.insert(data.end(), row.begin(), row.end());
    return make_tensor({b, d}, std::move(data));
}

// direct long-double reimplementation of the symmetric InfoNCE formula
long double clip_loss_direct(const TensorPtr& ua, const TensorPtr& ut, double tau) {
    const int b = ua->shape[0], d = ua->shape[1];
    std::vector<long double> z(static_cast<size_t>(b) * b);
    for (int i = 0; i < b; ++i) {
        for (int j = 0; j < b; ++j) {
            long double dot = 0.0L;
            for (int k = 0; k < d; ++k) {
                dot += static_cast<long double>(ua->at(i, k)) * ut->at(j, k);
            }
            z[static_cast<size_t>(i) * b + j] = static_cast<long double>(tau) * dot;
        }
    }
    long double rows = 0.0L, cols = 0.0L;
    for (int i = 0; i < b; ++i) {
        long double denom_r = 0.0L, denom_c = 0.0L;
        for (int j = 0; j < b; ++j) {
            denom_r += expl(z[static_cast<size_t>(i) * b + j]);
            denom_c += expl(z[static_cast<size_t>(j) * b + i]);
        }
        rows += logl(denom_r) - z[static_cast<size_t>(i) * b + i];
        cols += logl(denom_c) - z[static_cast<size_t>(i) * b + i];
    }
    return 0.5L * (rows + cols) / b;
}

long double siglip_loss_direct(const TensorPtr& ua, const TensorPtr& ut, double tau,
                               double bias) {
    const int b = ua->shape[0], d = ua->shape[1];
    long double total = 0.0L;
    for (int i = 0; i < b; ++i) {
        for (int j = 0; j < b; ++j) {
            long double dot = 0.0L;
            for (int k = 0; k < d; ++k) {
                dot += static_cast<long double>(ua->at(i, k)) * ut->at(j, k);
            }
            const long double z = static_cast<long double>(tau) * dot + bias;
            const long double l = (i == j) ? 1.0L : -1.0L;
            total += log1pl(expl(-l * z));
        }
    }
    return total / b;
}

LossParams params_with(double tau, double bias) {
    LossParams p;
    p.log_temperature = scalar_tensor(std::log(tau), true);
    p.siglip_bias = scalar_tensor(bias, true);
    return p;
}

} // namespace

TEST_CASE("clip loss is exactly zero for a single pair") {
    Rng rng(41);
    auto ua = unit_batch(rng, 1, 6);
    auto ut = unit_batch(rng, 1, 6);
    auto params = LossParams::init_for(LossKind::clip);
    CHECK(clip_loss(ua, ut, params)->data[0] == 0.0);
}

TEST_CASE("clip loss equals ln B for identical embeddings") {
    auto params = LossParams::init_for(LossKind::clip);
    for (int b : {2, 4, 8}) {
        auto ua = identical_rows(b, 8);
        auto ut = identical_rows(b, 8);
        const double loss = clip_loss(ua, ut, params)->data[0];
        CHECK(std::abs(loss - std::log(static_cast<double>(b))) <= 1e-9);
    }
}

TEST_CASE("clip loss matches the direct formula at high precision") {
    Rng rng(42);
    auto ua = unit_batch(rng, 3, 6);
    auto ut = unit_batch(rng, 3, 6);
    const double tau = 3.7;
    auto params = params_with(tau, 0.0);
    const double got = clip_loss(ua, ut, params)->data[0];
    const long double want = clip_loss_direct(ua, ut, tau);
    CHECK(std::abs(got - static_cast<double>(want)) <= 1e-10);
}

TEST_CASE("clip loss rejects mismatched batches") {
    Rng rng(43);
    auto ua = unit_batch(rng, 3, 6);
    auto ut = unit_batch(rng, 2, 6);
    auto params = LossParams::init_for(LossKind::clip);
    CHECK_THROWS_AS(clip_loss(ua, ut, params), ValidationError);
}

TEST_CASE("clip loss is invariant under joint row permutation") {
    Rng rng(44);
    auto ua = unit_batch(rng, 4, 5);
    auto ut = unit_batch(rng, 4, 5);
    auto params = LossParams::init_for(LossKind::clip);
    const double base = clip_loss(ua, ut, params)->data[0];

    const int perm[4] = {3, 1, 0, 2};
    std::vector<double> pa(20), pt(20);
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 5; ++j) {
            pa[static_cast<size_t>(i) * 5 + j] = ua->at(perm[i], j);
            pt[static_cast<size_t>(i) * 5 + j] = ut->at(perm[i], j);
        }
    }
    const double permuted = clip_loss(make_tensor({4, 5}, std::move(pa)),
                                      make_tensor({4, 5}, std::move(pt)), params)->data[0];
    CHECK(permuted == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("siglip loss at all-zero logits is B ln 2") {
    // orthogonal unit rows with zero bias put every logit at 0
    auto ua = make_tensor({2, 4}, {1, 0, 0, 0, 0, 1, 0, 0});
    auto ut = make_tensor({2, 4}, {0, 0, 1, 0, 0, 0, 0, 1});
    auto params = params_with(5.0, 0.0);
    const double loss = siglip_loss(ua, ut, params)->data[0];
    CHECK(std::abs(loss - 2.0 * std::log(2.0)) <= 1e-9);
}

TEST_CASE("siglip loss saturates for a strong positive pair") {
    // single pair with z = +20: tau=20 on a perfectly aligned pair, b=0
    auto ua = make_tensor({1, 2}, {1.0, 0.0});
    auto ut = make_tensor({1, 2}, {1.0, 0.0});
    auto params = params_with(20.0, 0.0);
    const double loss = siglip_loss(ua, ut, params)->data[0];
    CHECK(loss == doctest::Approx(2.061e-9).epsilon(1e-3));
}

TEST_CASE("siglip loss matches the direct formula at high precision") {
    Rng rng(45);
    auto ua = unit_batch(rng, 3, 7);
    auto ut = unit_batch(rng, 3, 7);
    auto params = params_with(8.0, -3.0);
    const double got = siglip_loss(ua, ut, params)->data[0];
    const long double want = siglip_loss_direct(ua, ut, 8.0, -3.0);
    CHECK(std::abs(got - static_cast<double>(want)) <= 1e-10);
}

TEST_CASE("temperature gradient matches finite differences for both losses") {
    Rng rng(46);
    auto ua = unit_batch(rng, 3, 5);
    auto ut = unit_batch(rng, 3, 5);
    for (auto kind : {LossKind::clip, LossKind::siglip}) {
        auto params = params_with(2.0, -0.5);
        auto fn = [&](const std::vector<TensorPtr>& in) {
            LossParams p;
            p.log_temperature = in[0];
            p.siglip_bias = in[1];
            return kind == LossKind::clip ? clip_loss(ua, ut, p) : siglip_loss(ua, ut, p);
        };
        auto report = grad_check("loss_temperature", fn,
                                 {params.log_temperature, params.siglip_bias}, 1e-6);
        CHECK(report.passed);
    }
}

TEST_CASE("embedding gradients flow through both losses") {
    Rng rng(47);
    auto ua = unit_batch(rng, 3, 5);
    auto ut = unit_batch(rng, 3, 5);
    auto params = params_with(2.0, -0.5);
    for (auto kind : {LossKind::clip, LossKind::siglip}) {
        auto fn = [&params, kind](const std::vector<TensorPtr>& in) {
            return kind == LossKind::clip ? clip_loss(in[0], in[1], params)
                                          : siglip_loss(in[0], in[1], params);
        };
        CHECK(grad_check("loss_embeddings", fn, {ua, ut}, 1e-6).passed);
    }
}

TEST_CASE("matryoshka with a single level is bit-identical to the base loss") {
    Rng rng(48);
    auto ua = unit_batch(rng, 4, 8);
    auto ut = unit_batch(rng, 4, 8);
    auto params = params_with(4.0, -1.0);
    MatryoshkaSpec spec{{8}};
    for (auto kind : {LossKind::clip, LossKind::siglip}) {
        const double base = (kind == LossKind::clip ? clip_loss(ua, ut, params)
                                                    : siglip_loss(ua, ut, params))->data[0];
        const double wrapped = matryoshka_loss(ua, ut, spec, kind, params)->data[0];
        CHECK(wrapped == base);
    }
}

TEST_CASE("matryoshka equals the hand-averaged pair of base losses") {
    Rng rng(49);
    auto ua = unit_batch(rng, 2, 4);
    auto ut = unit_batch(rng, 2, 4);
    auto params = params_with(3.0, 0.0);
    MatryoshkaSpec spec{{4, 2}};
    const double got = matryoshka_loss(ua, ut, spec, LossKind::clip, params)->data[0];

    const double full = clip_loss(ua, ut, params)->data[0];
    auto slice = [](const TensorPtr& t, int d) {
        std::vector<double> data;
        for (int i = 0; i < t->shape[0]; ++i) {
            for (int j = 0; j < d; ++j) data.push_back(t->at(i, j));
        }
        return make_tensor({t->shape[0], d}, std::move(data));
    };
    const double half = clip_loss(slice(ua, 2), slice(ut, 2), params)->data[0];
    CHECK(got == doctest::Approx(0.5 * (full + half)).epsilon(1e-14));
}

TEST_CASE("matryoshka prefix nesting is exact") {
    Rng rng(50);
    auto ua = unit_batch(rng, 2, 8);
    MatryoshkaSpec spec{{8, 4, 2}};
    spec.validate(8);
    // the level-k slice of the full embedding is bitwise the first d_k channels
    auto sliced = ops::slice_cols(ua, 0, 4);
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 4; ++j) {
            CHECK(sliced->at(i, j) == ua->at(i, j));
        }
    }
}

TEST_CASE("matryoshka rejects bad ladders") {
    Rng rng(51);
    auto ua = unit_batch(rng, 2, 8);
    auto ut = unit_batch(rng, 2, 8);
    auto params = LossParams::init_for(LossKind::clip);
    CHECK_THROWS_AS(matryoshka_loss(ua, ut, MatryoshkaSpec{{4, 2}}, LossKind::clip, params),
                    ValidationError);
    CHECK_THROWS_AS(matryoshka_loss(ua, ut, MatryoshkaSpec{{8, 9}}, LossKind::clip, params),
                    ValidationError);
    CHECK_THROWS_AS(matryoshka_loss(ua, ut, MatryoshkaSpec{{}}, LossKind::clip, params),
                    ValidationError);
}

TEST_CASE("renormalized slices differ from paper-literal slicing") {
    Rng rng(52);
    auto ua = unit_batch(rng, 3, 8);
    auto ut = unit_batch(rng, 3, 8);
    auto params = params_with(4.0, 0.0);
    MatryoshkaSpec spec{{8, 4}};
    const double literal = matryoshka_loss(ua, ut, spec, LossKind::clip, params, false)->data[0];
    const double renorm = matryoshka_loss(ua, ut, spec, LossKind::clip, params, true)->data[0];
    CHECK(literal != renorm);
}

TEST_CASE("clip loss is nonnegative on random batches") {
    Rng rng(53);
    auto params = LossParams::init_for(LossKind::clip);
    for (int trial = 0; trial < 25; ++trial) {
        const int b = 1 + static_cast<int>(rng.uniform_index(6));
        auto ua = unit_batch(rng, b, 6);
        auto ut = unit_batch(rng, b, 6);
        CHECK(clip_loss(ua, ut, params)->data[0] >= 0.0);
    }
}
