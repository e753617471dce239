#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <set>
#include <vector>

#include "crowdagg/csv.hpp"
#include "crowdagg/error.hpp"
#include "crowdagg/worker_model.hpp"

using namespace crowdagg;
using doctest::Approx;

TEST_CASE("answer pmfs match hand-computed values") {
    // delta = 0.3 * (1 - 8) = -2.1 at k = 5
    CHECK(honest_answer_prob(-2.1, 5, true) == Approx(0.2872774569564903).epsilon(1e-12));
    CHECK(honest_answer_prob(-2.1, 5, false) == Approx(0.17818063576087742).epsilon(1e-12));
    CHECK(simple_adversary_answer_prob(-2.1, 5, true) ==
          Approx(0.17818063576087742).epsilon(1e-12));
    CHECK(simple_adversary_answer_prob(-2.1, 5, false) ==
          Approx(0.20545484105978065).epsilon(1e-12));
    // delta = 1.5, easy_margin = 2 * (0 - 1.5) = -3 at k = 4
    CHECK(complex_adversary_answer_prob(1.5, -3.0, 4, true) ==
          Approx(0.08438056437276442).epsilon(1e-12));
    CHECK(complex_adversary_answer_prob(1.5, -3.0, 4, false) ==
          Approx(0.30520647854241184).epsilon(1e-12));
}

TEST_CASE("answer pmfs are normalized") {
    for (int k : {2, 3, 5, 9}) {
        for (double delta : {-30.0, -5.0, -1.0, 0.0, 0.5, 2.0, 10.0, 40.0}) {
            CHECK(honest_answer_prob(delta, k, true) +
                      (k - 1) * honest_answer_prob(delta, k, false) ==
                  Approx(1.0).epsilon(1e-12));
            CHECK(simple_adversary_answer_prob(delta, k, true) +
                      (k - 1) * simple_adversary_answer_prob(delta, k, false) ==
                  Approx(1.0).epsilon(1e-12));
            for (double em : {-4.0, 0.0, 3.0})
                CHECK(complex_adversary_answer_prob(delta, em, k, true) +
                          (k - 1) * complex_adversary_answer_prob(delta, em, k, false) ==
                      Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("extreme margins reach the closed-form limits") {
    for (int k : {2, 5}) {
        double u = 1.0 / k;
        // Hopeless task: everyone is a uniform guesser.
        CHECK(honest_answer_prob(-1000.0, k, true) == Approx(u).epsilon(1e-12));
        CHECK(honest_answer_prob(-1000.0, k, false) == Approx(u).epsilon(1e-12));
        CHECK(simple_adversary_answer_prob(-1000.0, k, true) == Approx(u).epsilon(1e-12));
        CHECK(simple_adversary_answer_prob(-1000.0, k, false) == Approx(u).epsilon(1e-12));
        // Trivial task: honest workers are perfect, wrong-doers never right.
        CHECK(honest_answer_prob(1000.0, k, true) == Approx(1.0).epsilon(1e-12));
        CHECK(honest_answer_prob(1000.0, k, false) == Approx(0.0).epsilon(1e-12));
        CHECK(simple_adversary_answer_prob(1000.0, k, true) == Approx(0.0).epsilon(1e-12));
        CHECK(simple_adversary_answer_prob(1000.0, k, false) ==
              Approx(1.0 / (k - 1)).epsilon(1e-12));
        // Cautious wrong-doer on an easy task tells the truth, otherwise lies.
        CHECK(complex_adversary_answer_prob(1000.0, 1000.0, k, true) ==
              Approx(1.0).epsilon(1e-12));
        CHECK(complex_adversary_answer_prob(1000.0, -1000.0, k, false) ==
              Approx(1.0 / (k - 1)).epsilon(1e-12));
    }
}

TEST_CASE("honest accuracy is monotone in the margin") {
    double prev_c = -1.0, prev_w = 2.0;
    for (double delta = -12.0; delta <= 12.0; delta += 0.5) {
        double c = honest_answer_prob(delta, 5, true);
        double w = honest_answer_prob(delta, 5, false);
        CHECK(c > prev_c);
        CHECK(w < prev_w);
        prev_c = c;
        prev_w = w;
    }
}

TEST_CASE("log-domain pmfs agree with plain logs and stay finite") {
    for (int k : {2, 5}) {
        for (double delta = -30.0; delta <= 30.0; delta += 1.3) {
            // References avoid 1 - sigmoid(delta), which cancels beyond
            // delta ~ 12 and would make log(plain) the inaccurate side.
            double s = sigmoid(delta), sm = sigmoid(-delta);
            CHECK(log_honest_answer_prob(delta, k, true) ==
                  Approx(std::log(s + sm / k)).epsilon(1e-12));
            CHECK(log_honest_answer_prob(delta, k, false) ==
                  Approx(std::log(sm / k)).epsilon(1e-12));
            CHECK(log_simple_adversary_answer_prob(delta, k, true) ==
                  Approx(std::log(sm / k)).epsilon(1e-12));
            CHECK(log_simple_adversary_answer_prob(delta, k, false) ==
                  Approx(std::log(sm / k + s / (k - 1))).epsilon(1e-12));
        }
        // Where the plain probability underflows to zero the log form keeps
        // the analytic value -delta - log k.
        CHECK(honest_answer_prob(745.0, k, false) == 0.0);
        CHECK(std::isfinite(log_honest_answer_prob(745.0, k, false)));
        CHECK(log_honest_answer_prob(745.0, k, false) ==
              Approx(-745.0 - std::log(double(k))).epsilon(1e-12));
        CHECK(log_simple_adversary_answer_prob(745.0, k, true) ==
              Approx(-745.0 - std::log(double(k))).epsilon(1e-12));
        CHECK(std::isfinite(log_honest_answer_prob(-745.0, k, true)));
        CHECK(log_honest_answer_prob(-745.0, k, true) ==
              Approx(-std::log(double(k))).epsilon(1e-9));
    }
}

TEST_CASE("answer_prob dispatches on worker kind") {
    const int k = 4, z = 2;
    WorkerParams w;
    w.skill = 3.0;
    w.slope = 0.7;
    double diff = 1.0;
    double delta = 0.7 * (3.0 - 1.0);
    CHECK(answer_prob(w, diff, k, z, z) == honest_answer_prob(delta, k, true));
    CHECK(answer_prob(w, diff, k, z, 4) == honest_answer_prob(delta, k, false));

    w.honest = false;
    CHECK(answer_prob(w, diff, k, z, z) == simple_adversary_answer_prob(delta, k, true));
    CHECK(answer_prob(w, diff, k, z, 1) == simple_adversary_answer_prob(delta, k, false));

    w.complex_adversary = true;
    w.threshold = 0.5;
    w.threshold_slope = 2.0;
    double em = 2.0 * (0.5 - 1.0);
    CHECK(answer_prob(w, diff, k, z, z) == complex_adversary_answer_prob(delta, em, k, true));
    CHECK(answer_prob(w, diff, k, z, 3) == complex_adversary_answer_prob(delta, em, k, false));
}

TEST_CASE("draw_answer is seed-deterministic and matches its pmf in frequency") {
    WorkerParams w;
    w.skill = 2.0;  // delta = 2 against difficulty 0
    const int k = 4, z = 3, n = 100000;

    Rng a(42), b(42);
    for (int i = 0; i < 50; ++i) CHECK(draw_answer(a, w, 0.0, k, z) == draw_answer(b, w, 0.0, k, z));

    Rng rng(kDefaultSeed);
    int correct = 0;
    std::vector<int> wrong_counts(static_cast<size_t>(k) + 1, 0);
    for (int i = 0; i < n; ++i) {
        int r = draw_answer(rng, w, 0.0, k, z);
        REQUIRE(r >= 1);
        REQUIRE(r <= k);
        if (r == z)
            ++correct;
        else
            ++wrong_counts[static_cast<size_t>(r)];
    }
    double p = 0.9105978084834118;  // sigma(2) + (1 - sigma(2)) / 4
    double se = std::sqrt(p * (1.0 - p) / n);
    CHECK(std::abs(correct / double(n) - p) < 3.0 * se);
    // Wrong mass splits evenly across the three other labels.
    double pw = (1.0 - p) / 3.0;
    double se_w = std::sqrt(pw * (1.0 - pw) / n);
    for (int r = 1; r <= k; ++r)
        if (r != z) CHECK(std::abs(wrong_counts[static_cast<size_t>(r)] / double(n) - pw) < 3.0 * se_w);
}

TEST_CASE("adversarial draws avoid the truth when solved") {
    WorkerParams w;
    w.honest = false;
    w.skill = 1000.0;  // always solves
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        int r = draw_answer(rng, w, 0.0, 5, 2);
        CHECK(r != 2);
        CHECK(r >= 1);
        CHECK(r <= 5);
    }
}

TEST_CASE("gaussian crowd generation has the advertised shape") {
    CrowdGenConfig cfg;
    cfg.n_workers = 20;
    cfg.n_tasks = 15;
    cfg.k = 3;
    cfg.probe_count = 4;
    cfg.adv_fraction = 0.25;
    cfg.seed = 99;
    Dataset d = generate_dataset(cfg);

    CHECK(d.answers.k() == 3);
    CHECK(d.answers.n_tasks() == 15);
    CHECK(d.answers.n_workers() == 20);
    CHECK(d.answers.n_entries() == 300);  // complete matrix
    CHECK(d.probes.count() == 4);
    REQUIRE(d.truth.size() == 15);
    for (int z : d.truth) {
        CHECK(z >= 1);
        CHECK(z <= 3);
    }
    for (int t : d.probes.probe_tasks()) CHECK(d.probes.label(t) == d.truth[static_cast<size_t>(t)]);

    int n_adv = 0;
    for (const auto& w : d.params.workers) n_adv += w.honest ? 0 : 1;
    CHECK(n_adv == 5);  // floor(0.25 * 20)
    CHECK(d.params.difficulty.size() == 15);

    // Same seed reproduces the dataset bit for bit; another seed does not.
    Dataset d2 = generate_dataset(cfg);
    CHECK(d.truth == d2.truth);
    CHECK(d.answers.n_entries() == d2.answers.n_entries());
    bool same = true;
    for (int i = 0; i < d.answers.n_entries(); ++i)
        same = same && d.answers.entries()[static_cast<size_t>(i)].answer ==
                           d2.answers.entries()[static_cast<size_t>(i)].answer;
    CHECK(same);
    cfg.seed = 100;
    Dataset d3 = generate_dataset(cfg);
    bool differs = d.truth != d3.truth;
    for (int i = 0; !differs && i < d.answers.n_entries(); ++i)
        differs = d.answers.entries()[static_cast<size_t>(i)].answer !=
                  d3.answers.entries()[static_cast<size_t>(i)].answer;
    CHECK(differs);
}

TEST_CASE("fractional adversary counts round down") {
    CrowdGenConfig cfg;
    cfg.n_workers = 15;
    cfg.n_tasks = 4;
    cfg.adv_fraction = 0.1;  // floor(1.5) = 1
    cfg.probe_count = 0;
    int n_adv = 0;
    for (const auto& w : generate_dataset(cfg).params.workers) n_adv += w.honest ? 0 : 1;
    CHECK(n_adv == 1);
}

TEST_CASE("complex adversaries carry threshold parameters") {
    CrowdGenConfig cfg;
    cfg.n_workers = 10;
    cfg.n_tasks = 5;
    cfg.adv_fraction = 0.3;
    cfg.adv_kind = AdversaryKind::kComplex;
    cfg.adv_theta_gap = 2.0;
    cfg.probe_count = 0;
    Dataset d = generate_dataset(cfg);
    int n_complex = 0;
    for (const auto& w : d.params.workers) {
        if (w.honest) {
            CHECK_FALSE(w.complex_adversary);
            continue;
        }
        ++n_complex;
        CHECK(w.complex_adversary);
        CHECK(w.threshold == Approx(w.skill - 2.0));
        CHECK(w.threshold_slope == w.slope);
    }
    CHECK(n_complex == 3);
}

TEST_CASE("crowd generation validates its configuration") {
    CrowdGenConfig cfg;
    cfg.k = 1;
    CHECK_THROWS_AS(generate_dataset(cfg), ConfigError);
    cfg = {};
    cfg.probe_count = cfg.n_tasks + 1;
    CHECK_THROWS_AS(generate_dataset(cfg), ConfigError);
    cfg = {};
    cfg.skill_var = -1.0;
    CHECK_THROWS_AS(generate_dataset(cfg), ConfigError);
    cfg = {};
    cfg.adv_fraction = 1.5;
    CHECK_THROWS_AS(generate_dataset(cfg), ConfigError);
    cfg = {};
    cfg.adv_kind = AdversaryKind::kComplex;
    cfg.adv_theta_gap = 0.0;
    CHECK_THROWS_AS(generate_dataset(cfg), ConfigError);
}

TEST_CASE("three-archetype crowds behave by role") {
    ShaDataset d = generate_sha_dataset(20, 30, 4, 0.25, 0.25, 11);
    REQUIRE(d.roles.size() == 20);
    int spam = 0, adv = 0, ham = 0;
    for (ShaRole r : d.roles) {
        if (r == ShaRole::kSpammer) ++spam;
        if (r == ShaRole::kAdversary) ++adv;
        if (r == ShaRole::kHammer) ++ham;
    }
    CHECK(spam == 5);
    CHECK(adv == 5);
    CHECK(ham == 10);

    std::vector<std::set<bool>> spam_hits(20);
    for (const AnswerEntry& e : d.answers.entries()) {
        int z = d.truth[static_cast<size_t>(e.task)];
        switch (d.roles[static_cast<size_t>(e.worker)]) {
            case ShaRole::kHammer: CHECK(e.answer == z); break;
            case ShaRole::kAdversary: CHECK(e.answer != z); break;
            default: spam_hits[static_cast<size_t>(e.worker)].insert(e.answer == z); break;
        }
    }
    // A uniform guesser over 30 tasks is right sometimes and wrong sometimes.
    for (int j = 0; j < 20; ++j)
        if (d.roles[static_cast<size_t>(j)] == ShaRole::kSpammer)
            CHECK(spam_hits[static_cast<size_t>(j)].size() == 2);

    CHECK_THROWS_AS(generate_sha_dataset(20, 30, 4, 0.7, 0.4, 1), ConfigError);
    CHECK_THROWS_AS(generate_sha_dataset(20, 30, 4, -0.1, 0.0, 1), ConfigError);
}

TEST_CASE("uniform three-group crowds respect their skill ranges") {
    Uniform3Config cfg;
    cfg.n_workers = 20;
    cfg.n_tasks = 10;
    cfg.k = 5;
    cfg.adv_fraction = 0.2;        // 4 wrong-doers
    cfg.low_skill_fraction = 0.3;  // 6 low-skilled honest workers
    cfg.high_skill_lo = 5.0;
    cfg.high_skill_hi = 8.0;
    cfg.low_skill_lo = 0.0;
    cfg.low_skill_hi = 2.0;
    cfg.probe_count = 3;
    cfg.seed = 5;
    Dataset d = generate_uniform3_dataset(cfg);

    CHECK(d.answers.n_entries() == 200);
    CHECK(d.probes.count() == 3);
    int n_adv = 0, n_low = 0;
    for (const auto& w : d.params.workers) {
        CHECK(w.slope == 1.0);  // slope_var = 0 pins every slope at the mean
        if (!w.honest) {
            ++n_adv;
            CHECK(w.skill >= 5.0);
            CHECK(w.skill <= 8.0);
        } else if (w.skill <= 2.0) {
            ++n_low;
            CHECK(w.skill >= 0.0);
        } else {
            CHECK(w.skill >= 5.0);
            CHECK(w.skill <= 8.0);
        }
    }
    CHECK(n_adv == 4);
    CHECK(n_low == 6);
    for (double dt : d.params.difficulty) {
        CHECK(dt >= 0.0);
        CHECK(dt <= 8.0);
    }

    CHECK_THROWS_AS(generate_uniform3_dataset([] {
                        Uniform3Config c;
                        c.adv_fraction = 0.6;
                        c.low_skill_fraction = 0.6;
                        return c;
                    }()),
                    ConfigError);
}

TEST_CASE("parameter exports carry the expected columns") {
    CrowdGenConfig cfg;
    cfg.n_workers = 6;
    cfg.n_tasks = 4;
    cfg.adv_fraction = 0.0;
    cfg.probe_count = 0;
    Dataset d = generate_dataset(cfg);

    std::string wpath = "test_wm_workers.csv";
    std::string tpath = "test_wm_tasks.csv";
    save_worker_params(d.params, d.answers, wpath);
    save_task_params(d.params.difficulty, d.truth, d.answers, tpath);

    CsvTable wt = read_csv(wpath);
    CHECK(wt.header == std::vector<std::string>{"worker_id", "v", "d", "a"});
    CHECK(wt.rows.size() == 6);
    CsvTable tt = read_csv(tpath);
    CHECK(tt.header == std::vector<std::string>{"task_id", "dtilde", "z"});
    CHECK(tt.rows.size() == 4);

    // Complex adversaries add threshold columns.
    cfg.adv_fraction = 0.5;
    cfg.adv_kind = AdversaryKind::kComplex;
    Dataset dc = generate_dataset(cfg);
    save_worker_params(dc.params, dc.answers, wpath);
    CsvTable wc = read_csv(wpath);
    CHECK(wc.header == std::vector<std::string>{"worker_id", "v", "d", "a", "theta", "b"});

    std::remove(wpath.c_str());
    std::remove(tpath.c_str());
}
