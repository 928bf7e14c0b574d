#include "doctest.h"

#include "dgad/trainer.hpp"
#include "support/fixtures.hpp"
#include "support/graphs.hpp"
#include "support/labeled.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace dgad;
using namespace dgad::testing;

namespace {

EventStore labeled_store(std::size_t nodes, std::size_t edges, std::uint64_t seed, std::size_t every) {
    std::mt19937_64 rng(seed);
    return relabel(random_store(nodes, edges, rng, 1000), [&](std::size_t i) { return i % every == 3; });
}

EventStore count_store(std::size_t anomalies, std::size_t normals) {
    std::vector<TemporalEdge> es;
    for (std::size_t i = 0; i < anomalies + normals; ++i) {
        TemporalEdge e;
        e.id = i;
        e.src = i % 7;
        e.dst = 7 + i % 5;
        e.t = double(i);
        e.features = {0.0};
        e.label = i < anomalies ? Label::Anomaly : Label::Normal;
        es.push_back(std::move(e));
    }
    return EventStore(std::move(es));
}

std::vector<double> flat_params(const Model& m) {
    std::vector<double> out;
    for (const auto& [n, t] : m.params().entries()) out.insert(out.end(), t.data().begin(), t.data().end());
    return out;
}

}  // namespace

TEST_CASE("chronological split boundaries") {
    std::mt19937_64 rng(1);
    const auto s10 = random_store(5, 10, rng);
    const auto sp = split_chronological(s10, {});
    CHECK(sp.train.size() == 5);
    CHECK(sp.val.size() == 2);
    CHECK(sp.test.size() == 3);
    CHECK(sp.train.begin == 0);
    CHECK(sp.val.begin == sp.train.end);
    CHECK(sp.test.begin == sp.val.end);
    CHECK(sp.test.end == 10);
    const auto s3 = random_store(5, 3, rng);
    const auto sp3 = split_chronological(s3, {});
    CHECK(sp3.train.size() == 1);
    CHECK(sp3.val.size() == 1);
    CHECK(sp3.test.size() == 1);
    CHECK_THROWS_AS(split_chronological(random_store(5, 2, rng), {}), std::invalid_argument);
    CHECK_THROWS_AS((SplitSpec{0.5, 0.5, 0.5}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((SplitSpec{0.0, 0.5, 0.5}.validate()), std::invalid_argument);

    const auto inc = make_store({{0, 1, 1}, {0, 1, 2}, {0, 1, 3}, {0, 1, 4}, {0, 1, 5}, {0, 1, 6}});
    const auto spi = split_chronological(inc, {});
    CHECK(inc.edge(spi.train.end - 1).t < inc.edge(spi.test.begin).t);
}

TEST_CASE("label budget arithmetic") {
    const auto a = count_store(10, 100);
    const EdgeRange all{0, a.num_edges()};
    const auto s1 = select_labels(a, all, {1, 4});
    CHECK(s1.anomalies.size() == 1);
    CHECK(s1.normals.size() == 10);
    CHECK(s1.size() == 11);

    const auto b = count_store(415, 13838);
    const auto s3 = select_labels(b, {0, b.num_edges()}, {3, 9});
    CHECK(s3.anomalies.size() == 3);
    CHECK(s3.normals.size() == 100);
    for (auto id : s3.anomalies) CHECK(b.edge(b.ordinal_of(id)).label == Label::Anomaly);
    for (auto id : s3.normals) CHECK(b.edge(b.ordinal_of(id)).label == Label::Normal);

    const auto full = select_labels(a, all, {10, 4});
    CHECK(full.size() == 110);

    CHECK_THROWS_AS(select_labels(a, all, {11, 4}), std::invalid_argument);
    CHECK_THROWS_AS(select_labels(a, {10, 110}, {1, 4}), std::invalid_argument);

    const auto again = select_labels(a, all, {1, 4});
    CHECK(again.anomalies == s1.anomalies);
    CHECK(again.normals == s1.normals);
    bool differs = false;
    for (std::uint64_t seed = 5; seed < 15 && !differs; ++seed) {
        differs = select_labels(a, all, {1, seed}).normals != s1.normals;
    }
    CHECK(differs);
}

TEST_CASE("labels come only from the training range") {
    const auto s = labeled_store(15, 200, 3, 10);
    const auto sp = split_chronological(s, {});
    const auto sel = select_labels(s, sp.train, {2, 1});
    for (auto id : sel.ids) CHECK(s.ordinal_of(id) < sp.train.end);
}

TEST_CASE("time scale maps the training span onto 1000") {
    const auto s = make_store({{0, 1, 10}, {0, 1, 20}, {0, 1, 60}, {0, 1, 500}});
    CHECK(compute_time_scale(s, {0, 3}) == doctest::Approx(1000.0 / 50.0));
    CHECK(compute_time_scale(make_store({{0, 1, 5}, {0, 1, 5}}), {0, 2}) == 1.0);
}

TEST_CASE("one epoch on a toy graph yields one log record") {
    const auto s = labeled_store(6, 10, 4, 4);
    const auto sp = split_chronological(s, {});
    LabelSelection sel;
    Model m(tiny_model_config(), 1);
    TrainOptions opt;
    opt.epochs = 1;
    opt.batch_size = 2;
    const auto r = fit(m, s, sp, sel, opt);
    REQUIRE(r.log.size() == 1);
    CHECK(r.log[0].epoch == 1);
    CHECK(std::isfinite(r.log[0].train_loss));
    CHECK(r.best_epoch == 1);
}

TEST_CASE("training is deterministic and reduces the loss") {
    const auto s = labeled_store(20, 240, 5, 12);
    const auto sp = split_chronological(s, {});
    const auto sel = select_labels(s, sp.train, {2, 3});
    TrainOptions opt;
    opt.epochs = 6;
    opt.batch_size = 16;
    opt.lr = 1e-2;
    opt.seed = 42;
    Model a(tiny_model_config(), 9), b(tiny_model_config(), 9);
    a.set_time_scale(compute_time_scale(s, sp.train));
    b.set_time_scale(a.time_scale());
    const auto ra = fit(a, s, sp, sel, opt);
    const auto rb = fit(b, s, sp, sel, opt);
    REQUIRE(ra.log.size() == 6);
    for (std::size_t i = 0; i < ra.log.size(); ++i) {
        CHECK(ra.log[i].train_loss == rb.log[i].train_loss);
        CHECK((ra.log[i].val_auc == rb.log[i].val_auc || (std::isnan(ra.log[i].val_auc) && std::isnan(rb.log[i].val_auc))));
    }
    CHECK(flat_params(a) == flat_params(b));
    const double tail = (ra.log[3].train_loss + ra.log[4].train_loss + ra.log[5].train_loss) / 3;
    CHECK(tail < ra.log[0].train_loss);

    SUBCASE("worker count does not change the result") {
        TrainOptions par = opt;
        par.workers = 3;
        Model c(tiny_model_config(), 9), e(tiny_model_config(), 9);
        c.set_time_scale(a.time_scale());
        e.set_time_scale(a.time_scale());
        const auto rc = fit(c, s, sp, sel, par);
        const auto re = fit(e, s, sp, sel, par);
        for (std::size_t i = 0; i < rc.log.size(); ++i) {
            CHECK(rc.log[i].train_loss == re.log[i].train_loss);
            CHECK(rc.log[i].train_loss == ra.log[i].train_loss);
        }
        CHECK(flat_params(c) == flat_params(e));
        CHECK(flat_params(c) == flat_params(a));
    }

    SUBCASE("the best epoch snapshot is the one kept") {
        std::size_t best = 0;
        double best_auc = -1;
        for (const auto& rec : ra.log) {
            if (!std::isnan(rec.val_auc) && rec.val_auc > best_auc) {
                best_auc = rec.val_auc;
                best = rec.epoch;
            }
        }
        CHECK(ra.best_epoch == best);
        const auto ev = evaluate(a, s, sp.val, opt.eval_seed);
        CHECK(ev.auc == ra.best_val_auc);
    }
}

TEST_CASE("labels outside the selection never reach training") {
    const auto s = labeled_store(20, 200, 6, 9);
    const auto sp = split_chronological(s, {});
    const auto sel = select_labels(s, sp.train, {1, 3});
    // Flip every label that is not selected, including those of val and test.
    const auto flipped = relabel(s, [&](std::size_t i) {
        const bool anom = s.edge(i).label == Label::Anomaly;
        return sel.contains(s.edge(i).id) ? anom : !anom;
    });
    TrainOptions opt;
    opt.epochs = 2;
    opt.batch_size = 20;
    opt.lr = 1e-3;
    Model a(tiny_model_config(), 2), b(tiny_model_config(), 2);
    const auto ra = fit(a, s, sp, sel, opt);
    const auto rb = fit(b, flipped, sp, sel, opt);
    for (std::size_t i = 0; i < 2; ++i) CHECK(ra.log[i].train_loss == rb.log[i].train_loss);

    LabelSelection leaked = sel;
    leaked.ids.insert(s.edge(sp.test.begin).id);
    leaked.normals.push_back(s.edge(sp.test.begin).id);
    Model c(tiny_model_config(), 2);
    CHECK_THROWS_AS(fit(c, s, sp, leaked, opt), std::invalid_argument);
}

TEST_CASE("training log lines") {
    const std::vector<EpochRecord> log{{1, 0.5, 0.75, 1.25}, {2, 0.25, NAN, 2.0}};
    const auto path = std::filesystem::temp_directory_path() / "dgad_test_log.jsonl";
    write_training_log(log, path, false);
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == "{\"epoch\":1,\"train_loss\":0.5,\"val_auc\":0.75}\n{\"epoch\":2,\"train_loss\":0.25,\"val_auc\":null}\n");
    std::filesystem::remove(path);
}

TEST_CASE("fit rejects bad options") {
    const auto s = labeled_store(6, 20, 4, 4);
    const auto sp = split_chronological(s, {});
    Model m(tiny_model_config(), 1);
    TrainOptions opt;
    opt.epochs = 0;
    CHECK_THROWS_AS(fit(m, s, sp, {}, opt), std::invalid_argument);
    opt.epochs = 1;
    opt.batch_size = 0;
    CHECK_THROWS_AS(fit(m, s, sp, {}, opt), std::invalid_argument);
}
