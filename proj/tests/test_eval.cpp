#include <doctest.h>

#include <rararl/eval.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <vector>

using namespace rararl;

namespace {

PolicyFactory scripted(int action) {
    return [action](std::uint64_t) { return Policy([action](const Observation&) { return action; }); };
}

TrackConfig open_road() {
    TrackConfig cfg;
    cfg.shape = "straight";
    cfg.straight_length = 1000.0;
    cfg.stuck_speed_fraction = 0.0;
    return cfg;
}

}  // namespace

TEST_CASE("regime names round-trip") {
    CHECK(parse_regime("none") == Regime::None);
    CHECK(parse_regime("random") == Regime::RandomPerturb);
    CHECK(parse_regime("adversarial") == Regime::AdversarialPerturb);
    CHECK(regime_name(Regime::RandomPerturb) == std::string("random"));
    CHECK_THROWS(parse_regime("chaos"));
}

TEST_CASE("a clean scripted driver never crashes and makes progress") {
    EvalConfig cfg;
    cfg.regime = Regime::None;
    cfg.episodes = 5;
    cfg.seed = 3;
    EvalReport rep = evaluate_policy(scripted(1), nullptr, cfg, open_road());
    REQUIRE(rep.episodes.size() == 5);
    for (const auto& ep : rep.episodes) {
        CHECK(ep.catastrophes == 0);
        CHECK(ep.catastrophe_reward == 0.0);
        CHECK(ep.progress_total > 0.0);
        CHECK(ep.steps == 400);  // rides out the full episode
    }
    CHECK(rep.mean_catastrophes == 0.0);
    CHECK(rep.mean_progress_total > 0.0);
}

TEST_CASE("a wall-seeking adversary forces a catastrophe every episode") {
    EvalConfig cfg;
    cfg.regime = Regime::AdversarialPerturb;
    cfg.episodes = 5;
    cfg.seed = 4;
    // protagonist drives straight, perturber steers hard left once per cycle
    PolicyFactory adversary = scripted(0);
    EvalReport rep = evaluate_policy(scripted(1), &adversary, cfg, open_road());
    for (const auto& ep : rep.episodes) {
        CHECK(ep.catastrophes == 1);
        CHECK(ep.catastrophe_reward == -2.5);
        CHECK(ep.steps < 400);
    }
    CHECK(rep.mean_catastrophe_reward == -2.5);
}

TEST_CASE("reports are deterministic in the evaluation seed") {
    EvalConfig cfg;
    cfg.regime = Regime::RandomPerturb;
    cfg.episodes = 6;
    cfg.seed = 9;
    TrackConfig track;
    EvalReport a = evaluate_policy(scripted(1), nullptr, cfg, track);
    EvalReport b = evaluate_policy(scripted(1), nullptr, cfg, track);
    CHECK(a.to_csv() == b.to_csv());

    cfg.seed = 10;
    EvalReport c = evaluate_policy(scripted(1), nullptr, cfg, track);
    CHECK(a.to_csv() != c.to_csv());
}

TEST_CASE("the perturber owns exactly n of every m+n steps") {
    // count protagonist calls under a random regime: with m=10, n=1 the
    // protagonist must act on exactly 10/11 of all steps. The road is wide
    // and the episodes short enough that even worst-case random steering
    // cannot reach a wall, so every episode runs to the step cap.
    auto counter = std::make_shared<std::atomic<long>>(0);
    PolicyFactory counting = [counter](std::uint64_t) {
        return Policy([counter](const Observation&) {
            counter->fetch_add(1);
            return 1;
        });
    };
    EvalConfig cfg;
    cfg.regime = Regime::RandomPerturb;
    cfg.episodes = 3;
    cfg.seed = 5;
    cfg.parallel = false;
    TrackConfig road = open_road();
    road.width = 40.0;
    road.max_episode_steps = 60;
    EvalReport rep = evaluate_policy(counting, nullptr, cfg, road);
    long total = 0;
    for (const auto& ep : rep.episodes) total += ep.steps;
    long expected = 0;
    for (const auto& ep : rep.episodes) {
        long full = ep.steps / (cfg.m + cfg.n);
        long rem = ep.steps % (cfg.m + cfg.n);
        expected += full * cfg.m + std::min<long>(rem, cfg.m);
    }
    CHECK(counter->load() == expected);
    CHECK(total == 3 * 60);
}

TEST_CASE("regime none never consults the perturber slot") {
    EvalConfig cfg;
    cfg.regime = Regime::None;
    cfg.episodes = 2;
    cfg.seed = 6;
    // a perturber factory in regime none is a usage error
    PolicyFactory adversary = scripted(0);
    CHECK_THROWS(evaluate_policy(scripted(1), &adversary, cfg, open_road()));
    // adversarial regime without a perturber is equally invalid
    cfg.regime = Regime::AdversarialPerturb;
    CHECK_THROWS(evaluate_policy(scripted(1), nullptr, cfg, open_road()));
}

TEST_CASE("evaluation does not mutate network parameters") {
    RngStream init(derive_seed(80, Stream::Init));
    EnsembleQNetwork net = make_ensemble(kObsDim, {16}, 3, kNumActions, init);
    EnsembleQNetwork before = net;
    RiskConfig risk;
    risk.lambda_p = 0.1;
    EvalConfig cfg;
    cfg.regime = Regime::RandomPerturb;
    cfg.episodes = 3;
    cfg.seed = 7;
    TrackConfig track;
    evaluate(net, risk, nullptr, RiskConfig{}, cfg, track);
    CHECK(net.trunk.weights == before.trunk.weights);
    CHECK(net.trunk.biases == before.trunk.biases);
    for (int h = 0; h < 3; ++h) {
        CHECK(net.heads[h].weights == before.heads[h].weights);
        CHECK(net.heads[h].biases == before.heads[h].biases);
    }
}

TEST_CASE("serial and parallel evaluation agree byte for byte") {
    RngStream init(derive_seed(81, Stream::Init));
    EnsembleQNetwork net = make_ensemble(kObsDim, {16}, 2, kNumActions, init);
    RiskConfig risk;
    TrackConfig track;
    for (Regime regime : {Regime::None, Regime::RandomPerturb}) {
        EvalConfig cfg;
        cfg.regime = regime;
        cfg.episodes = 8;
        cfg.seed = 12;
        cfg.parallel = false;
        EvalReport serial = evaluate(net, risk, nullptr, RiskConfig{}, cfg, track);
        cfg.parallel = true;
        EvalReport parallel = evaluate(net, risk, nullptr, RiskConfig{}, cfg, track);
        CHECK(serial.to_csv() == parallel.to_csv());
    }
}

TEST_CASE("csv output carries one row per episode plus the mean row") {
    EvalConfig cfg;
    cfg.regime = Regime::None;
    cfg.episodes = 4;
    cfg.seed = 2;
    EvalReport rep = evaluate_policy(scripted(1), nullptr, cfg, open_road());
    std::string csv = rep.to_csv();
    long lines = std::count(csv.begin(), csv.end(), '\n');
    CHECK(lines == 1 + 4 + 1);  // header, episodes, mean
    CHECK(csv.find("episode,") == 0);
    CHECK(csv.find("mean") != std::string::npos);
}

TEST_CASE("comparison table formats models by rows and regimes by columns") {
    std::vector<std::string> names{"alpha", "beta"};
    std::vector<Regime> regimes{Regime::None, Regime::AdversarialPerturb};
    std::vector<std::vector<double>> cells{{0.0, -0.25}, {-0.5, -2.5}};
    std::string csv = compare_table_csv(names, regimes, cells);
    CHECK(csv.find("model,none,adversarial") == 0);
    CHECK(csv.find("alpha,0,-0.25") != std::string::npos);
    CHECK(csv.find("beta,-0.5,-2.5") != std::string::npos);

    // a perfect model scores zero in every cell; keep the road wide and the
    // episodes short so worst-case random steering provably cannot reach a
    // wall before the step cap
    EvalConfig cfg;
    cfg.regime = Regime::None;
    cfg.episodes = 3;
    cfg.seed = 1;
    TrackConfig road = open_road();
    road.width = 40.0;
    road.max_episode_steps = 60;
    EvalReport none = evaluate_policy(scripted(1), nullptr, cfg, road);
    cfg.regime = Regime::RandomPerturb;
    EvalReport rnd = evaluate_policy(scripted(1), nullptr, cfg, road);
    std::string table = compare_table_csv(
        {"scripted"}, {Regime::None, Regime::RandomPerturb},
        {{none.mean_catastrophe_reward, rnd.mean_catastrophe_reward}});
    CHECK(table.find("scripted,0,0") != std::string::npos);

    // adding a regime column must not disturb existing cells
    EvalConfig again = cfg;
    again.regime = Regime::RandomPerturb;
    EvalReport rnd2 = evaluate_policy(scripted(1), nullptr, again, road);
    CHECK(rnd2.mean_catastrophe_reward == rnd.mean_catastrophe_reward);

    CHECK_THROWS(compare_table_csv(names, regimes, {{0.0, 0.0}}));  // row mismatch
}
