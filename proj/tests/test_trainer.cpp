#include <doctest.h>

#include <rararl/trainer.hpp>

#include "reference_dqn.hpp"

#include <cstdint>
#include <vector>

using namespace rararl;

namespace {

TrainConfig small_cfg(Variant v, std::uint64_t seed, long steps) {
    TrainConfig cfg;
    cfg.variant = v;
    cfg.seed = seed;
    cfg.total_steps = steps;
    cfg.checkpoint_interval = 0;  // final checkpoint only
    return cfg;
}

bool same_bundle(const AgentBundle& a, const AgentBundle& b) {
    if (a.online.trunk.weights != b.online.trunk.weights) return false;
    if (a.online.heads.size() != b.online.heads.size()) return false;
    for (std::size_t i = 0; i < a.online.heads.size(); ++i) {
        if (a.online.heads[i].weights != b.online.heads[i].weights) return false;
        if (a.online.heads[i].biases != b.online.heads[i].biases) return false;
    }
    return a.target.trunk.weights == b.target.trunk.weights;
}

std::uint64_t head_count_of(const TrainConfig& cfg) {
    return std::uint64_t(make_variant(cfg).k);
}

}  // namespace

TEST_CASE("variant names round-trip") {
    for (const char* name : {"dqn", "bsdqn", "bsdqnrand", "bsdqnrandriskaverse",
                             "bsdqnadv", "bsdqnadvriskaverse"}) {
        CHECK(variant_name(parse_variant(name)) == std::string(name));
    }
    CHECK_THROWS(parse_variant("ddpg"));
    CHECK_THROWS(parse_variant(""));
}

TEST_CASE("variant table resolves heads, risk and perturber") {
    TrainConfig cfg;

    cfg.variant = Variant::Dqn;
    VariantSpec vs = make_variant(cfg);
    CHECK(vs.k == 1);
    CHECK(vs.perturber == PerturberKind::None);
    CHECK(!vs.use_schedule);
    CHECK(vs.risk.lambda_p == 0.0);
    CHECK(vs.heads_per_update == 1);
    CHECK(vs.mask_rate == 0.0);

    cfg.variant = Variant::Bsdqn;
    vs = make_variant(cfg);
    CHECK(vs.k == 10);
    CHECK(vs.perturber == PerturberKind::None);
    CHECK(vs.heads_per_update == 5);

    cfg.variant = Variant::Bsdqnrand;
    vs = make_variant(cfg);
    CHECK(vs.perturber == PerturberKind::Random);
    CHECK(vs.use_schedule);
    CHECK(!vs.adversary_trained);
    CHECK(vs.risk.lambda_p == 0.0);

    cfg.variant = Variant::Bsdqnrandriskaverse;
    vs = make_variant(cfg);
    CHECK(vs.perturber == PerturberKind::Random);
    CHECK(vs.risk.lambda_p == 0.1);
    CHECK(vs.risk.lambda_a == 0.0);
    CHECK(!vs.risk.zero_sum);

    cfg.variant = Variant::Bsdqnadv;
    vs = make_variant(cfg);
    CHECK(vs.perturber == PerturberKind::Adversary);
    CHECK(vs.adversary_trained);
    CHECK(vs.risk.lambda_p == 0.0);

    cfg.variant = Variant::Bsdqnadvriskaverse;
    vs = make_variant(cfg);
    CHECK(vs.risk.lambda_p == 0.1);
    CHECK(vs.risk.lambda_a == 0.1);
    CHECK(vs.risk.zero_sum);
}

TEST_CASE("explicit overrides that contradict the variant are conflicts") {
    TrainConfig cfg;
    cfg.variant = Variant::Dqn;
    cfg.k = 10;
    CHECK_THROWS_WITH_AS(make_variant(cfg),
                         doctest::Contains("config conflict"), std::invalid_argument);
    cfg.k = 1;
    CHECK_NOTHROW(make_variant(cfg));

    TrainConfig risk;
    risk.variant = Variant::Bsdqn;
    risk.lambda_p = 0.1;
    CHECK_THROWS_WITH_AS(make_variant(risk),
                         doctest::Contains("no risk weighting"), std::invalid_argument);

    TrainConfig zs;
    zs.variant = Variant::Bsdqnadvriskaverse;
    zs.lambda_a = 0.2;  // default lambda_p is 0.1
    CHECK_THROWS_WITH_AS(make_variant(zs),
                         doctest::Contains("lambda_a == lambda_p"), std::invalid_argument);
    zs.lambda_p = 0.2;
    CHECK_NOTHROW(make_variant(zs));
    VariantSpec vs = make_variant(zs);
    CHECK(vs.risk.lambda_p == 0.2);
    CHECK(vs.risk.lambda_a == 0.2);

    TrainConfig shrunk;
    shrunk.variant = Variant::Bsdqn;
    shrunk.k = 3;  // heads_per_update clamps to the ensemble size
    vs = make_variant(shrunk);
    CHECK(vs.k == 3);
    CHECK(vs.heads_per_update == 3);
}

TEST_CASE("zero steps produce empty metrics and untouched optimizer state") {
    TrainConfig cfg = small_cfg(Variant::Bsdqn, 4, 0);
    TrackConfig track;
    TrainOutput out = train(cfg, track);
    CHECK(out.steps == 0);
    CHECK(out.metrics.rows().empty());
    CHECK(out.protagonist.opt.trunk.step == 0);
    CHECK(same_bundle(out.protagonist, out.protagonist));
    CHECK(!out.adversary.has_value());
}

TEST_CASE("training is bitwise deterministic in the seed") {
    TrainConfig cfg = small_cfg(Variant::Bsdqnadv, 11, 400);
    cfg.schedule.xi = 100;
    TrackConfig track;
    TrainOutput a = train(cfg, track);
    TrainOutput b = train(cfg, track);
    CHECK(a.metrics.to_csv() == b.metrics.to_csv());
    CHECK(same_bundle(a.protagonist, b.protagonist));
    REQUIRE(a.adversary.has_value());
    REQUIRE(b.adversary.has_value());
    CHECK(same_bundle(*a.adversary, *b.adversary));
    CHECK(a.episodes == b.episodes);

    TrainConfig other = cfg;
    other.seed = 12;
    TrainOutput c = train(other, track);
    CHECK(a.metrics.to_csv() != c.metrics.to_csv());
}

TEST_CASE("adversarial variants train a second network, others do not") {
    TrackConfig track;
    TrainConfig cfg = small_cfg(Variant::Bsdqnrand, 5, 50);
    cfg.schedule.xi = 10;
    TrainOutput rand_out = train(cfg, track);
    CHECK(!rand_out.adversary.has_value());

    cfg = small_cfg(Variant::Bsdqnadv, 5, 50);
    cfg.schedule.xi = 10;
    TrainOutput adv_out = train(cfg, track);
    CHECK(adv_out.adversary.has_value());
}

TEST_CASE("dqn variant reproduces a standalone one-step DQN loop bitwise") {
    const std::uint64_t seed = 2024;
    const long T = 150;

    refdqn::Params rp;
    rp.seed = seed;
    rp.total_steps = T;
    TrackConfig track;
    std::vector<std::vector<double>> ref_first_layer;
    refdqn::run(rp, track, [&](long, const DenseNet& net) {
        ref_first_layer.push_back(net.weights[0]);
    });

    TrainConfig cfg = small_cfg(Variant::Dqn, seed, T);
    std::vector<std::vector<double>> got_first_layer;
    TrainHooks hooks;
    hooks.after_protagonist_update = [&](long, const EnsembleQNetwork& online) {
        got_first_layer.push_back(online.trunk.weights[0]);
    };
    train(cfg, track, &hooks);

    REQUIRE(!ref_first_layer.empty());
    REQUIRE(ref_first_layer.size() == got_first_layer.size());
    for (std::size_t i = 0; i < ref_first_layer.size(); ++i)
        CHECK(ref_first_layer[i] == got_first_layer[i]);
}

TEST_CASE("checkpoint hook fires at the interval and once at the end") {
    TrainConfig cfg = small_cfg(Variant::Bsdqn, 3, 250);
    cfg.checkpoint_interval = 100;
    TrackConfig track;
    std::vector<long> steps;
    TrainHooks hooks;
    hooks.on_checkpoint = [&](const TrainView& view) {
        steps.push_back(view.step);
        CHECK(view.protagonist.online != nullptr);
        CHECK(view.adversary == nullptr);
        CHECK(std::uint64_t(view.protagonist.online->head_count()) == head_count_of(cfg));
    };
    train(cfg, track, &hooks);
    CHECK(steps == std::vector<long>{100, 200, 250});
}

TEST_CASE("td_update with all-zero masks is a parameter no-op") {
    RngStream init(derive_seed(70, Stream::Init));
    EnsembleQNetwork net = make_ensemble(kObsDim, {16}, 3, kNumActions, init);
    EnsembleQNetwork target = net;
    EnsembleQNetwork before = net;
    EnsembleAdam opt = make_ensemble_adam(net);

    std::vector<NStepTransition> batch(4);
    for (auto& item : batch) {
        item.obs.fill(0.1);
        item.bootstrap_obs.fill(0.2);
        item.horizon = 1;
        item.cumulative_reward = 0.5;
    }
    std::vector<BootstrapMask> masks(4, BootstrapMask{{0, 0, 0}});
    TdUpdateOptions opts;
    double loss = td_update(net, target, batch, masks, opt, opts);
    CHECK(loss == 0.0);
    CHECK(net.trunk.weights == before.trunk.weights);
    for (int h = 0; h < 3; ++h) CHECK(net.heads[h].weights == before.heads[h].weights);
}

TEST_CASE("repeated updates on a fixed batch shrink the loss") {
    RngStream init(derive_seed(71, Stream::Init));
    EnsembleQNetwork net = make_ensemble(kObsDim, {16}, 2, kNumActions, init);
    EnsembleQNetwork target = net;
    EnsembleAdam opt = make_ensemble_adam(net);

    RngStream data(derive_seed(72, Stream::Batch));
    std::vector<NStepTransition> batch(8);
    for (auto& item : batch) {
        for (double& x : item.obs) x = data.uniform01();
        item.bootstrap_obs = item.obs;
        item.action = int(data.uniform_below(kNumActions));
        item.cumulative_reward = data.uniform01() * 2.0 - 1.0;
        item.horizon = 1;
        item.done_within_window = true;  // fixed targets, independent of net
    }
    std::vector<BootstrapMask> masks(8, BootstrapMask{{1, 1}});
    TdUpdateOptions opts;
    opts.lr = 1e-2;

    double first = td_update(net, target, batch, masks, opt, opts);
    double last = first;
    for (int i = 0; i < 49; ++i) last = td_update(net, target, batch, masks, opt, opts);
    CHECK(last < first * 0.5);
}

TEST_CASE("a mask weight of two doubles the item gradient exactly") {
    RngStream init(derive_seed(73, Stream::Init));
    EnsembleQNetwork net = make_ensemble(kObsDim, {8}, 2, kNumActions, init);
    NStepTransition item;
    item.obs.fill(0.3);
    item.action = 2;
    item.cumulative_reward = 0.7;
    item.done_within_window = true;

    EnsembleGradients g1 = make_zero_gradients(net);
    EnsembleGradients g2 = make_zero_gradients(net);
    double l1 = td_item_gradients(net, item, 0.0, BootstrapMask{{1, 0}}, 1.0, g1);
    double l2 = td_item_gradients(net, item, 0.0, BootstrapMask{{2, 0}}, 1.0, g2);
    CHECK(l2 == 2.0 * l1);
    for (std::size_t l = 0; l < g1.trunk.weights.size(); ++l)
        for (std::size_t i = 0; i < g1.trunk.weights[l].size(); ++i)
            CHECK(g2.trunk.weights[l][i] == 2.0 * g1.trunk.weights[l][i]);
    for (std::size_t i = 0; i < g1.heads[0].weights[0].size(); ++i)
        CHECK(g2.heads[0].weights[0][i] == 2.0 * g1.heads[0].weights[0][i]);
    // the unmasked head contributes nothing either way
    for (double v : g1.heads[1].weights[0]) CHECK(v == 0.0);
    for (double v : g2.heads[1].weights[0]) CHECK(v == 0.0);
}

TEST_CASE("config validation rejects nonsense") {
    TrainConfig cfg;
    cfg.total_steps = -1;
    CHECK_THROWS(cfg.validate());
    cfg = TrainConfig{};
    cfg.batch_size = 0;
    CHECK_THROWS(cfg.validate());
    cfg = TrainConfig{};
    cfg.gamma = 1.5;
    CHECK_THROWS(cfg.validate());
    cfg = TrainConfig{};
    cfg.eps_decay_to = cfg.eps_decay_from;
    CHECK_THROWS(cfg.validate());
    cfg = TrainConfig{};
    cfg.trunk_hidden = {};
    CHECK_THROWS(cfg.validate());
}
