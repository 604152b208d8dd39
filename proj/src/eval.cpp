#include "consist/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "consist/text.hpp"
#include "json.hpp"

namespace consist {

std::vector<DatasetRow> dataset_from_jsonl_text(std::string_view jsonl) {
  std::vector<DatasetRow> rows;
  std::vector<std::string> problems;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      DatasetRow row;
      for (const auto& k : j.at("concept_set")) row.concept_set.push_back(k.get<std::string>());
      for (const auto& r : j.at("references")) row.references.push_back(r.get<std::string>());
      if (row.concept_set.size() < 3 || row.concept_set.size() > 5)
        throw std::invalid_argument("concept_set must hold 3 to 5 keywords, got " +
                                    std::to_string(row.concept_set.size()));
      if (row.references.empty()) throw std::invalid_argument("references must be non-empty");
      if (j.contains("inflections"))
        row.inflections = InflectionLexicon::from_json_text(j.at("inflections").dump());
      rows.push_back(std::move(row));
    } catch (const std::exception& e) {
      problems.push_back("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!problems.empty()) {
    std::string msg = "dataset errors: ";
    for (std::size_t i = 0; i < problems.size(); ++i) {
      if (i) msg += "; ";
      msg += problems[i];
    }
    throw std::runtime_error(msg);
  }
  if (rows.empty()) throw std::runtime_error("empty dataset");
  return rows;
}

std::vector<DatasetRow> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return dataset_from_jsonl_text(ss.str());
}

namespace {

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::size_t> prev(m + 1, 0), cur(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

}  // namespace

double rouge_l(std::span<const std::string> candidate,
               std::span<const std::vector<std::string>> references, double beta) {
  if (candidate.empty()) return 0.0;
  double best = 0.0;
  for (const auto& ref : references) {
    if (ref.empty()) continue;
    const double lcs = static_cast<double>(lcs_length(candidate, ref));
    const double p = lcs / static_cast<double>(candidate.size());
    const double r = lcs / static_cast<double>(ref.size());
    const double b2 = beta * beta;
    const double denom = r + b2 * p;
    const double f = denom == 0.0 ? 0.0 : (1.0 + b2) * p * r / denom;
    best = std::max(best, f);
  }
  return 100.0 * best;
}

double rouge_l_text(std::string_view candidate, std::span<const std::string> references,
                    double beta) {
  const auto cand = text::words(candidate);
  std::vector<std::vector<std::string>> refs;
  for (const auto& r : references) refs.push_back(text::words(r));
  return rouge_l(cand, refs, beta);
}

double bleu_4(std::span<const std::string> candidate,
              std::span<const std::vector<std::string>> references) {
  if (candidate.empty() || references.empty()) return 0.0;
  const std::size_t c_len = candidate.size();
  const std::size_t max_order = std::min<std::size_t>(4, c_len);

  double log_sum = 0.0;
  for (std::size_t n = 1; n <= max_order; ++n) {
    std::map<std::vector<std::string>, std::size_t> counts;
    for (std::size_t i = 0; i + n <= c_len; ++i)
      counts[{candidate.begin() + static_cast<std::ptrdiff_t>(i),
              candidate.begin() + static_cast<std::ptrdiff_t>(i + n)}] += 1;
    std::size_t clipped = 0, total = 0;
    for (const auto& [gram, cnt] : counts) {
      total += cnt;
      std::size_t best_ref = 0;
      for (const auto& ref : references) {
        std::size_t in_ref = 0;
        for (std::size_t i = 0; i + n <= ref.size(); ++i) {
          if (std::equal(gram.begin(), gram.end(),
                         ref.begin() + static_cast<std::ptrdiff_t>(i)))
            ++in_ref;
        }
        best_ref = std::max(best_ref, in_ref);
      }
      clipped += std::min(cnt, best_ref);
    }
    if (clipped == 0) return 0.0;  // a zero precision zeroes the geometric mean
    log_sum += std::log(static_cast<double>(clipped) / static_cast<double>(total));
  }
  const double geo = std::exp(log_sum / static_cast<double>(max_order));

  // Brevity penalty against the closest-length reference, ties to shorter.
  std::size_t r_len = references.front().size();
  for (const auto& ref : references) {
    const auto diff = [&](std::size_t len) {
      return len > c_len ? len - c_len : c_len - len;
    };
    if (diff(ref.size()) < diff(r_len) || (diff(ref.size()) == diff(r_len) && ref.size() < r_len))
      r_len = ref.size();
  }
  const double bp =
      c_len < r_len ? std::exp(1.0 - static_cast<double>(r_len) / static_cast<double>(c_len))
                    : 1.0;
  return 100.0 * bp * geo;
}

double bleu_4_text(std::string_view candidate, std::span<const std::string> references) {
  const auto cand = text::words(candidate);
  std::vector<std::vector<std::string>> refs;
  for (const auto& r : references) refs.push_back(text::words(r));
  return bleu_4(cand, refs);
}

EvalReport run_suite(std::span<const DatasetRow> dataset, const RowPipeline& pipeline,
                     const InflectionLexicon& lexicon, int workers) {
  if (dataset.empty()) throw std::invalid_argument("empty dataset");
  if (workers < 1) workers = 1;

  EvalReport report;
  report.rows.resize(dataset.size());

  auto eval_row = [&](std::size_t i) {
    const DatasetRow& row = dataset[i];
    RowResult& res = report.rows[i];
    try {
      const auto t0 = std::chrono::steady_clock::now();
      const std::string generated = pipeline(row);
      const auto t1 = std::chrono::steady_clock::now();
      res.seconds = std::chrono::duration<double>(t1 - t0).count();
      res.generated = generated;

      const InflectionLexicon& lex = row.inflections ? *row.inflections : lexicon;
      const auto c = CnfConstraint::from_keywords(row.concept_set, lex);
      const auto state = evaluate_text(generated, c);
      res.coverage = 100.0 * coverage(state);
      res.satisfied = is_satisfied(state) ? 100.0 : 0.0;
      res.rouge_l = rouge_l_text(generated, row.references);
      res.bleu_4 = bleu_4_text(generated, row.references);
    } catch (const std::exception& e) {
      res.failed = true;
      res.error = e.what();
    }
  };

  if (workers == 1) {
    for (std::size_t i = 0; i < dataset.size(); ++i) eval_row(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= dataset.size()) break;
          eval_row(i);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  std::size_t ok = 0;
  for (const auto& res : report.rows) {
    if (res.failed) {
      ++report.failures;
      continue;
    }
    ++ok;
    report.rouge_l += res.rouge_l;
    report.bleu_4 += res.bleu_4;
    report.coverage += res.coverage;
    report.satisfied += res.satisfied;
    report.seconds += res.seconds;
  }
  if (ok > 0) {
    const double d = static_cast<double>(ok);
    report.rouge_l /= d;
    report.bleu_4 /= d;
    report.coverage /= d;
    report.satisfied /= d;
    report.seconds /= d;
  }
  return report;
}

std::string EvalReport::to_json_text(bool include_rows) const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json agg;
  agg["rouge_l"] = rouge_l;
  agg["bleu_4"] = bleu_4;
  agg["cider"] = nullptr;   // out of scope: needs corpus idf
  agg["spice"] = nullptr;   // out of scope: needs a scene-graph parser
  agg["coverage"] = coverage;
  agg["satisfied"] = satisfied;
  agg["seconds"] = seconds;
  agg["failures"] = failures;
  j["aggregates"] = std::move(agg);
  if (include_rows) {
    nlohmann::ordered_json rows_json = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
      nlohmann::ordered_json row;
      if (r.failed) {
        row["failed"] = true;
        row["error"] = r.error;
      } else {
        row["generated"] = r.generated;
        row["rouge_l"] = r.rouge_l;
        row["bleu_4"] = r.bleu_4;
        row["cider"] = nullptr;
        row["spice"] = nullptr;
        row["coverage"] = r.coverage;
        row["satisfied"] = r.satisfied;
        row["seconds"] = r.seconds;
      }
      rows_json.push_back(std::move(row));
    }
    j["rows"] = std::move(rows_json);
  }
  return j.dump(2);
}

std::string EvalReport::to_table(std::string_view method_label) const {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof(buf), "%-32s %8s %8s %8s %8s %9s %10s %8s\n", "Method", "ROUGE-L",
                "BLEU-4", "CIDEr", "SPICE", "Coverage", "Satisfied", "Time(s)");
  out += buf;
  std::snprintf(buf, sizeof(buf), "%-32s %8.2f %8.2f %8s %8s %9.2f %10.2f %8.2f\n",
                std::string(method_label).c_str(), rouge_l, bleu_4, "-", "-", coverage,
                satisfied, seconds);
  out += buf;
  return out;
}

}  // namespace consist
