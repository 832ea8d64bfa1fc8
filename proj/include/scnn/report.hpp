#pragma once

#include "scnn/classifier.hpp"
#include "scnn/convnet.hpp"
#include "scnn/dataio.hpp"
#include "scnn/discovery.hpp"
#include "scnn/pipeline.hpp"
#include "scnn/sailnet.hpp"

#include <ostream>
#include <span>
#include <string>

namespace scnn {

// Binary 8-bit PGM; values are mapped linearly from [lo, hi] to [0, 255].
void write_pgm(const std::string& path, const Grid<double>& values, double lo, double hi);

// Filters tiled on a square-ish grid, 1-pixel gaps, zero weight drawn mid-gray.
Grid<double> tile_filters(const FilterBank& bank);
// Pooled spike counts per map, tiled like the filters.
Grid<double> tile_pooled_counts(const PooledMaps& pooled);

void write_filters_pgm(const std::string& path, const FilterBank& bank);
// |r| rendered black (0) to white (1).
void write_correlation_pgm(const std::string& path, const CorrelationReport& report);

void write_sailnet_csv(const std::string& path, std::span<const SailnetDiagnostics> diagnostics);
void write_correlation_history_csv(const std::string& path,
                                   std::span<const DiscoveryIteration> history);
void write_correlation_matrix_csv(const std::string& path, const CorrelationReport& report);
void write_folds_csv(const std::string& path, std::span<const FoldResult> folds);
void write_evaluation_csv(const std::string& path, const EvalReport& report);
void write_confusion_csv(const std::string& path, const EvalReport& report);
void write_sparsity_csv(const std::string& path, const EvalReport& report);
void write_control_csv(const std::string& path, const ControlReport& report);

void print_evaluation(std::ostream& out, const EvalReport& report);
void print_control(std::ostream& out, const ControlReport& report);

} // namespace scnn
