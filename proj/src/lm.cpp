#include "consist/lm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "consist/text.hpp"

namespace consist {

const std::string kEosToken = "</s>";
const std::string kBosToken = "<s>";

namespace {

std::string kind_label(LmError::Kind k) {
  switch (k) {
    case LmError::Kind::transport: return "transport";
    case LmError::Kind::timeout: return "timeout";
    case LmError::Kind::http_status: return "http status";
    case LmError::Kind::schema: return "schema";
    case LmError::Kind::vocab: return "vocab";
  }
  return "?";
}

}  // namespace

LmError::LmError(Kind kind, const std::string& msg, int http_status)
    : std::runtime_error("lm " + kind_label(kind) + " error: " + msg),
      kind_(kind),
      status_(http_status) {}

bool LmError::retryable() const {
  if (kind_ == Kind::transport || kind_ == Kind::timeout) return true;
  if (kind_ == Kind::http_status) return status_ >= 500;
  return false;
}

const std::string& LmBackend::token(int id) const {
  if (id == bos_id()) return kBosToken;
  const auto& v = vocab();
  if (id < 0 || id >= static_cast<int>(v.size()))
    throw std::out_of_range("token id out of range: " + std::to_string(id));
  return v[static_cast<std::size_t>(id)];
}

NgramLm NgramLm::build(std::span<const std::string> corpus, int order, double lambda) {
  if (corpus.empty()) throw std::invalid_argument("empty corpus");
  if (order < 1) throw std::invalid_argument("order must be >= 1");
  if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");

  NgramLm lm;
  lm.order_ = order;
  lm.lambda_ = lambda;

  std::set<std::string> words;
  std::vector<std::vector<std::string>> sentences;
  for (const auto& line : corpus) {
    auto toks = text::words(line);
    for (const auto& w : toks) words.insert(w);
    sentences.push_back(std::move(toks));
  }

  lm.vocab_.assign(words.begin(), words.end());
  lm.vocab_.push_back(kEosToken);  // eos last
  lm.eos_id_ = static_cast<int>(lm.vocab_.size()) - 1;
  for (std::size_t i = 0; i < lm.vocab_.size(); ++i)
    lm.token_ids_[lm.vocab_[i]] = static_cast<int>(i);

  const int bos = lm.bos_id();
  for (const auto& sent : sentences) {
    std::vector<int> ids(static_cast<std::size_t>(order - 1), bos);
    for (const auto& w : sent) ids.push_back(lm.token_ids_.at(w));
    ids.push_back(lm.eos_id_);
    for (std::size_t i = static_cast<std::size_t>(order - 1); i < ids.size(); ++i) {
      std::vector<int> ctx(ids.begin() + static_cast<std::ptrdiff_t>(i - (order - 1)),
                           ids.begin() + static_cast<std::ptrdiff_t>(i));
      auto& slot = lm.counts_[ctx];
      slot.first[ids[i]] += 1;
      slot.second += 1;
    }
  }
  return lm;
}

NgramLm NgramLm::build_from_file(const std::string& path, int order, double lambda) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line))
    if (!text::words(line).empty()) lines.push_back(line);
  return build(lines, order, lambda);
}

std::vector<int> NgramLm::context_of(std::span<const int> prefix) const {
  const std::size_t need = static_cast<std::size_t>(order_ - 1);
  std::vector<int> ctx;
  ctx.reserve(need);
  if (prefix.size() >= need) {
    ctx.assign(prefix.end() - static_cast<std::ptrdiff_t>(need), prefix.end());
  } else {
    ctx.assign(need - prefix.size(), bos_id());
    ctx.insert(ctx.end(), prefix.begin(), prefix.end());
  }
  return ctx;
}

std::vector<double> NgramLm::next_logprobs(std::span<const int> prefix) const {
  for (int id : prefix)
    if (id != bos_id() && (id < 0 || id >= static_cast<int>(vocab_.size())))
      throw std::out_of_range("prefix id out of range: " + std::to_string(id));

  const std::size_t v = vocab_.size();
  std::vector<double> logp(v);
  const auto it = counts_.find(context_of(prefix));
  const std::map<int, long>* row = it == counts_.end() ? nullptr : &it->second.first;
  const long total = it == counts_.end() ? 0 : it->second.second;

  if (lambda_ == 0.0 && total == 0) {
    const double u = -std::log(static_cast<double>(v));
    std::fill(logp.begin(), logp.end(), u);  // unseen context backs off to uniform
    return logp;
  }

  const double denom = static_cast<double>(total) + lambda_ * static_cast<double>(v);
  for (std::size_t t = 0; t < v; ++t) {
    long c = 0;
    if (row) {
      auto jt = row->find(static_cast<int>(t));
      if (jt != row->end()) c = jt->second;
    }
    const double num = static_cast<double>(c) + lambda_;
    logp[t] = num > 0.0 ? std::log(num / denom) : -std::numeric_limits<double>::infinity();
  }
  return logp;
}

std::vector<int> NgramLm::tokenize(std::string_view raw, TokenizeMode mode) const {
  std::vector<int> ids;
  std::size_t i = 0;
  while (i < raw.size()) {
    while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
    std::size_t j = i;
    while (j < raw.size() && !std::isspace(static_cast<unsigned char>(raw[j]))) ++j;
    if (j > i) {
      const std::string w = text::lower(raw.substr(i, j - i));
      auto it = token_ids_.find(w);
      if (it != token_ids_.end()) {
        ids.push_back(it->second);
      } else if (mode == TokenizeMode::strict) {
        throw LmError(LmError::Kind::vocab, "out-of-vocabulary word: '" + w + "'");
      }  // lenient: drop
    }
    i = j;
  }
  return ids;
}

std::string NgramLm::detokenize(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) {
    if (id == bos_id() || id == eos_id_) continue;
    if (id < 0 || id >= static_cast<int>(vocab_.size()))
      throw std::out_of_range("token id out of range: " + std::to_string(id));
    if (!out.empty()) out += ' ';
    out += vocab_[static_cast<std::size_t>(id)];
  }
  return out;
}

double sequence_logprob(const LmBackend& lm, std::span<const std::string> words) {
  std::vector<int> ids;
  for (const auto& w : words) {
    auto one = lm.tokenize(w, TokenizeMode::lenient);
    ids.insert(ids.end(), one.begin(), one.end());
  }
  double sum = 0.0;
  std::vector<int> prefix;
  prefix.reserve(ids.size());
  for (int id : ids) {
    const auto row = lm.next_logprobs(prefix);
    sum += row[static_cast<std::size_t>(id)];
    prefix.push_back(id);
  }
  return sum;
}

}  // namespace consist
