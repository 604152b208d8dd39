#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "consist/constraints.hpp"

namespace consist {

struct DatasetRow {
  std::vector<std::string> concept_set;  // 3..5 keywords
  std::vector<std::string> references;   // >= 1
  std::optional<InflectionLexicon> inflections;
};

// JSONL: {"concept_set":[...], "references":[...], "inflections":{...}?}.
// Malformed or arity-violating lines are reported together by line number.
std::vector<DatasetRow> load_dataset(const std::string& path);
std::vector<DatasetRow> dataset_from_jsonl_text(std::string_view text);

// LCS-based F1, best reference, on a 0-100 scale. The harmonic-mean weight
// beta defaults to 1 (the paper does not fix it).
double rouge_l(std::span<const std::string> candidate,
               std::span<const std::vector<std::string>> references,
               double beta = 1.0);
double rouge_l_text(std::string_view candidate, std::span<const std::string> references,
                    double beta = 1.0);

// Modified n-gram precision BLEU for orders 1..min(4,|cand|), clip counts
// against all references, brevity penalty from the closest-length reference
// (ties toward the shorter), 0-100 scale. Any zero precision zeroes the
// geometric mean; no additive smoothing.
double bleu_4(std::span<const std::string> candidate,
              std::span<const std::vector<std::string>> references);
double bleu_4_text(std::string_view candidate, std::span<const std::string> references);

struct RowResult {
  double rouge_l = 0.0;
  double bleu_4 = 0.0;
  double coverage = 0.0;   // 0-100
  double satisfied = 0.0;  // 0 or 100
  double seconds = 0.0;
  bool failed = false;
  std::string error;
  std::string generated;
};

struct EvalReport {
  std::vector<RowResult> rows;
  double rouge_l = 0.0;
  double bleu_4 = 0.0;
  double coverage = 0.0;
  double satisfied = 0.0;
  double seconds = 0.0;
  std::size_t failures = 0;

  // Per-row and aggregate sections; CIDEr/SPICE columns are emitted as null.
  std::string to_json_text(bool include_rows = true) const;
  // Fixed-width table mirroring the report columns.
  std::string to_table(std::string_view method_label) const;
};

using RowPipeline = std::function<std::string(const DatasetRow&)>;

// Runs the pipeline per row (timed around the call only), scores coverage /
// satisfied / ROUGE-L / BLEU-4, and aggregates arithmetic means over the
// non-failed rows. Pipeline exceptions mark the row failed. Rows may be
// evaluated on `workers` threads; results keep input order.
EvalReport run_suite(std::span<const DatasetRow> dataset, const RowPipeline& pipeline,
                     const InflectionLexicon& lexicon, int workers = 1);

}  // namespace consist
