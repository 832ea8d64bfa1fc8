#include "scnn/report.hpp"

#include "scnn/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>

namespace scnn {

namespace {

std::ofstream open_out(const std::string& path, bool binary = false) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw Error("cannot write " + path);
    out << std::setprecision(9);
    return out;
}

void finish(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw Error("write failed: " + path);
}

std::size_t tile_columns(std::size_t n) {
    return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
}

// Lays out `n` tiles of rows x cols with 1-pixel gaps filled with `gap`.
template <class Fill>
Grid<double> tile(std::size_t n, std::size_t rows, std::size_t cols, double gap, Fill fill) {
    const std::size_t across = std::max<std::size_t>(1, tile_columns(n));
    const std::size_t down = (n + across - 1) / across;
    Grid<double> out(down * (rows + 1) + 1, across * (cols + 1) + 1, gap);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t r0 = 1 + (k / across) * (rows + 1);
        const std::size_t c0 = 1 + (k % across) * (cols + 1);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) out(r0 + r, c0 + c) = fill(k, r, c);
        }
    }
    return out;
}

} // namespace

void write_pgm(const std::string& path, const Grid<double>& values, double lo, double hi) {
    if (!(hi > lo)) throw InvalidParameter("PGM range must satisfy lo < hi");
    auto out = open_out(path, true);
    out << "P5\n" << values.cols << ' ' << values.rows << "\n255\n";
    for (double v : values.data) {
        const double t = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
        out.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * t))));
    }
    finish(out, path);
}

Grid<double> tile_filters(const FilterBank& bank) {
    // Each filter is scaled by its own largest magnitude into [-1, 1].
    std::vector<double> scale(bank.count, 1.0);
    for (std::size_t k = 0; k < bank.count; ++k) {
        double m = 0.0;
        for (float w : bank.filter(k)) m = std::max(m, std::abs(static_cast<double>(w)));
        scale[k] = m > 0.0 ? 1.0 / m : 1.0;
    }
    return tile(bank.count, bank.size, bank.size, 0.0, [&](std::size_t k, std::size_t r, std::size_t c) {
        return bank.filter(k)[r * bank.size + c] * scale[k];
    });
}

Grid<double> tile_pooled_counts(const PooledMaps& pooled) {
    const auto counts = pooled.spikes.counts();
    const double steps = std::max(1, pooled.steps());
    return tile(pooled.maps, pooled.rows, pooled.cols, 0.0,
                [&](std::size_t k, std::size_t r, std::size_t c) {
                    return counts[k * pooled.rows * pooled.cols + r * pooled.cols + c] / steps;
                });
}

void write_filters_pgm(const std::string& path, const FilterBank& bank) {
    write_pgm(path, tile_filters(bank), -1.0, 1.0);
}

void write_correlation_pgm(const std::string& path, const CorrelationReport& report) {
    Grid<double> g(report.size, report.size);
    for (std::size_t i = 0; i < report.matrix.size(); ++i) g.data[i] = std::abs(report.matrix[i]);
    write_pgm(path, g, 0.0, 1.0);
}

void write_sailnet_csv(const std::string& path, std::span<const SailnetDiagnostics> diagnostics) {
    auto out = open_out(path);
    out << "iteration,mean_spikes_per_patch,mean_rate,mean_inh\n";
    for (const auto& d : diagnostics) {
        out << d.iteration << ',' << d.mean_spikes_per_patch << ',' << d.mean_rate << ','
            << d.mean_inh << '\n';
    }
    finish(out, path);
}

void write_correlation_history_csv(const std::string& path,
                                   std::span<const DiscoveryIteration> history) {
    auto out = open_out(path);
    out << "iteration,mean_abs_correlation,fires_per_image\n";
    for (const auto& it : history) {
        out << it.iteration << ',' << it.correlation.average << ',' << it.fires_per_image << '\n';
    }
    finish(out, path);
}

void write_correlation_matrix_csv(const std::string& path, const CorrelationReport& report) {
    auto out = open_out(path);
    for (std::size_t a = 0; a < report.size; ++a) {
        for (std::size_t b = 0; b < report.size; ++b) {
            if (b) out << ',';
            out << report.at(a, b);
        }
        out << '\n';
    }
    finish(out, path);
}

void write_folds_csv(const std::string& path, std::span<const FoldResult> folds) {
    auto out = open_out(path);
    out << "fold,kernel_mode,accuracy\n";
    for (const auto& f : folds) {
        out << f.fold << ',' << to_string(f.mode) << ',' << f.accuracy << '\n';
    }
    finish(out, path);
}

void write_evaluation_csv(const std::string& path, const EvalReport& report) {
    auto out = open_out(path);
    out << "noise,accuracy,drop\n";
    const double clean = report.rows.empty() ? 0.0 : report.rows.front().accuracy;
    for (const auto& row : report.rows) {
        out << to_string(row.noise) << ',' << row.accuracy << ',' << clean - row.accuracy << '\n';
    }
    finish(out, path);
}

void write_confusion_csv(const std::string& path, const EvalReport& report) {
    auto out = open_out(path);
    out << "noise,true_label";
    for (std::size_t c = 0; c < kClasses; ++c) out << ",pred_" << c;
    out << '\n';
    for (const auto& row : report.rows) {
        for (std::size_t t = 0; t < kClasses; ++t) {
            out << to_string(row.noise) << ',' << t;
            for (int n : row.confusion[t]) out << ',' << n;
            out << '\n';
        }
    }
    finish(out, path);
}

void write_sparsity_csv(const std::string& path, const EvalReport& report) {
    auto out = open_out(path);
    out << "class";
    const std::size_t hidden = report.class_activity.empty() ? 0 : report.class_activity[0].size();
    for (std::size_t h = 0; h < hidden; ++h) out << ",h" << h;
    out << '\n';
    for (std::size_t c = 0; c < report.class_activity.size(); ++c) {
        out << c;
        for (double v : report.class_activity[c]) out << ',' << v;
        out << '\n';
    }
    finish(out, path);
}

void write_control_csv(const std::string& path, const ControlReport& report) {
    auto out = open_out(path);
    out << "neuron_model,stdp_rule";
    for (const auto& n : report.noises) out << ',' << to_string(n);
    out << ",final_correlation\n";
    for (const auto& row : report.rows) {
        out << to_string(row.neuron_model) << ',' << to_string(row.stdp_rule);
        for (double a : row.accuracy) out << ',' << a;
        out << ',' << (row.correlation_history.empty() ? 0.0 : row.correlation_history.back())
            << '\n';
    }
    finish(out, path);
}

void print_evaluation(std::ostream& out, const EvalReport& report) {
    const double clean = report.rows.empty() ? 0.0 : report.rows.front().accuracy;
    out << "noise            accuracy   drop\n";
    for (const auto& row : report.rows) {
        char line[96];
        std::snprintf(line, sizeof line, "%-15s %8.2f%% %6.2f\n", to_string(row.noise).c_str(),
                      100.0 * row.accuracy, 100.0 * (clean - row.accuracy));
        out << line;
    }
}

void print_control(std::ostream& out, const ControlReport& report) {
    out << "neurons        stdp          ";
    for (const auto& n : report.noises) {
        char cell[32];
        std::snprintf(cell, sizeof cell, "%12s", to_string(n).c_str());
        out << cell;
    }
    out << "   corr\n";
    for (const auto& row : report.rows) {
        char head[48];
        std::snprintf(head, sizeof head, "%-14s %-13s", std::string(to_string(row.neuron_model)).c_str(),
                      std::string(to_string(row.stdp_rule)).c_str());
        out << head;
        for (double a : row.accuracy) {
            char cell[32];
            std::snprintf(cell, sizeof cell, "%11.2f%%", 100.0 * a);
            out << cell;
        }
        char tail[32];
        std::snprintf(tail, sizeof tail, " %6.4f\n",
                      row.correlation_history.empty() ? 0.0 : row.correlation_history.back());
        out << tail;
    }
}

} // namespace scnn
