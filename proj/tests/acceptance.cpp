// Desk-scale acceptance run: one PASS/FAIL line per criterion, exit status 1 if
// any criterion fails. Uses the first 3,000 training and 1,000 test images.

#include "scnn/archive.hpp"
#include "scnn/config.hpp"
#include "scnn/pipeline.hpp"
#include "scnn/report.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>
#include <sys/wait.h>

using namespace scnn;

namespace {

int failures = 0;

void verdict(int criterion, bool pass, const std::string& detail) {
    if (!pass) ++failures;
    std::printf("criterion %d: %s  %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
}

std::string pct(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * fraction);
    return buf;
}

std::string num(double v, int digits = 4) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

RunConfig desk_config() {
    const std::string dir = SCNN_MNIST_DIR;
    RunConfig c;
    c.train_images = dir + "/train-images-idx3-ubyte.gz";
    c.train_labels = dir + "/train-labels-idx1-ubyte.gz";
    c.test_images = dir + "/test-images-idx3-ubyte.gz";
    c.test_labels = dir + "/test-labels-idx1-ubyte.gz";
    c.filter_samples = c.discovery_samples = c.classifier_samples = 3000;
    c.test_samples = 1000;
    c.cv_folds = 0;
    return c;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Discovery + classifier on fixed filters, scored on the clean test set.
double clean_accuracy(const RunConfig& config, const FilterBank& bank, const LabeledDataset& train,
                      const LabeledDataset& test) {
    ModelArchive archive(config);
    archive.set_filters(bank);
    archive.set_discovery(train_discovery_stage(config, bank, train, &std::cerr).layer);
    archive.set_classifier(
        train_classifier_stage(config, bank, archive.discovery(), train, &std::cerr).model);
    const std::vector<NoiseSpec> clean{{}};
    return evaluate(archive, test, clean).rows.front().accuracy;
}

void oracle_suite() {
    const std::string command = std::string(SCNN_UNIT_TESTS) +
                                " --test-suite=dataio,spike,sailnet,convnet,discovery,classifier,pipeline"
                                " --minimal > /dev/null 2>&1";
    const int status = std::system(command.c_str());
    const bool pass = WIFEXITED(status) && WEXITSTATUS(status) == 0;
    verdict(7, pass, pass ? "every oracle and invariant test passed"
                          : "unit/property suite reported failures (run scnn_tests for details)");
}

} // namespace

int main() {
    try {
        oracle_suite();

        const RunConfig base = desk_config();
        const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());

        // Criterion 6: SAILnet sparsity for the default D = 32 filters.
        RunConfig c32 = base;
        c32.workers = static_cast<std::int64_t>(workers);
        const LabeledDataset train = load_training_set(c32);
        const LabeledDataset test = load_test_set(c32);
        const SailnetTraining filters32 = train_filter_stage(c32, train, &std::cerr);
        {
            const auto patches = PatchSource::from_images(
                std::span(train.images).first(static_cast<std::size_t>(c32.filter_samples)), 5, 1);
            Rng rng(stage_seed(c32, SeedStream::filters, 1));
            const double spikes = mean_spikes_per_patch(filters32.state, patches, 200000,
                                                        static_cast<int>(c32.T), c32.tau, rng);
            verdict(6, spikes >= 0.8 && spikes <= 1.7,
                    "mean spikes per patch after " + std::to_string(c32.filter_iterations) +
                        " iterations = " + num(spikes) + " (required [0.8, 1.7])");
        }

        // Criteria 1 and 2: D = 16, linear head, H = 64 versus H = 8.
        RunConfig c16 = base;
        c16.D = 16;
        c16.H = 64;
        c16.feature_mode = FeatureMode::linear;
        c16.workers = 1;
        const auto start = std::chrono::steady_clock::now();
        const FilterBank bank16 = train_filter_stage(c16, train, &std::cerr).bank;
        const double acc64 = clean_accuracy(c16, bank16, train, test);
        const double elapsed = seconds_since(start);
        verdict(1, acc64 >= 0.88 && elapsed <= 1200.0,
                "D=16 H=64 linear test accuracy " + pct(acc64) + " (required >= 88%), " +
                    num(elapsed, 0) + " s single-threaded (required <= 1200 s)");

        RunConfig c8 = c16;
        c8.H = 8;
        const double acc8 = clean_accuracy(c8, bank16, train, test);
        verdict(2, acc64 - acc8 >= 0.08,
                "H=8 " + pct(acc8) + " vs H=64 " + pct(acc64) + ", gap " +
                    num(100.0 * (acc64 - acc8), 2) + " points (required >= 8)");

        // Criteria 3, 4 and 5: the four discovery variants on the D = 32 filters.
        const std::vector<NoiseSpec> noises{{},
                                            {NoiseSpec::Kind::gaussian, 0.04},
                                            {NoiseSpec::Kind::salt_pepper, 0.04},
                                            {NoiseSpec::Kind::salt_pepper, 0.25}};
        const ControlReport control =
            control_matrix(c32, filters32.bank, train, test, noises, &std::cerr);
        print_control(std::cout, control);

        const auto& prob = control.row(NeuronModel::probabilistic, StdpRule::probabilistic);
        const auto& plain = control.row(NeuronModel::plain_lif, StdpRule::probabilistic);
        {
            const auto& h = prob.correlation_history;
            bool decreasing = h.size() >= 2;
            for (std::size_t i = 1; i < h.size(); ++i) decreasing = decreasing && h[i] < h[i - 1];
            std::ostringstream detail;
            detail << "probabilistic |corr| by iteration:";
            for (double v : h) detail << ' ' << num(v);
            const bool ordered = plain.correlation_history.back() > h.back();
            detail << "; strictly decreasing " << (decreasing ? "yes" : "no")
                   << "; final plain LIF " << num(plain.correlation_history.back())
                   << " vs probabilistic " << num(h.back());
            verdict(3, decreasing && ordered, detail.str());
        }
        {
            const double clean = prob.accuracy[0];
            const double bounds[] = {0.03, 0.04, 0.15};
            bool pass = true;
            std::ostringstream detail;
            detail << "clean " << pct(clean);
            for (std::size_t n = 1; n < noises.size(); ++n) {
                const double drop = clean - prob.accuracy[n];
                pass = pass && drop <= bounds[n - 1];
                detail << "; " << to_string(noises[n]) << " drop " << num(100.0 * drop, 2)
                       << " (<= " << num(100.0 * bounds[n - 1], 0) << ")";
            }
            verdict(4, pass, detail.str());
        }
        {
            double worst_prob = 1.0, best_plain = 0.0;
            for (const auto& row : control.rows) {
                if (row.neuron_model == NeuronModel::probabilistic)
                    worst_prob = std::min(worst_prob, row.accuracy[0]);
                else
                    best_plain = std::max(best_plain, row.accuracy[0]);
            }
            verdict(5, worst_prob - best_plain >= 0.01,
                    "worst probabilistic variant " + pct(worst_prob) + " vs best plain LIF " +
                        pct(best_plain) + " (required margin >= 1 point)");
        }
    } catch (const std::exception& e) {
        std::printf("acceptance run aborted: %s\n", e.what());
        return 2;
    }
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
