#include <fstream>

#include "symdl/smt.hpp"

namespace symdl {

namespace {

std::string encode_model(const std::vector<std::pair<std::string, std::string>>& model) {
  std::string out;
  for (const auto& [var, hex] : model) {
    if (!out.empty()) out += ';';
    out += var;
    out += '=';
    out += hex;
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> decode_model(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> model;
  size_t start = 0;
  while (start < text.size()) {
    size_t end = text.find(';', start);
    if (end == std::string::npos) end = text.size();
    std::string item = text.substr(start, end - start);
    size_t eq = item.find('=');
    if (eq != std::string::npos) {
      model.emplace_back(item.substr(0, eq), item.substr(eq + 1));
    }
    start = end + 1;
  }
  return model;
}

}  // namespace

QueryCache::QueryCache(const std::string& path) : path_(path) {
  if (path_.empty()) return;
  std::ifstream in(path_);
  std::string line;
  while (std::getline(in, line)) {
    size_t t1 = line.find('\t');
    if (t1 == std::string::npos) continue;
    size_t t2 = line.find('\t', t1 + 1);
    SmtResultData r;
    std::string hash = line.substr(0, t1);
    if (t2 == std::string::npos) {
      r.status = line.substr(t1 + 1);
    } else {
      r.status = line.substr(t1 + 1, t2 - t1 - 1);
      r.model = decode_model(line.substr(t2 + 1));
    }
    if (r.status != "sat" && r.status != "unsat") continue;
    entries_[hash] = std::move(r);
  }
}

std::optional<SmtResultData> QueryCache::lookup(const std::string& hash) {
  std::lock_guard lock(mu_);
  auto it = entries_.find(hash);
  if (it == entries_.end()) return std::nullopt;
  ++hits_;
  return it->second;
}

void QueryCache::store(const std::string& hash, const SmtResultData& result) {
  std::lock_guard lock(mu_);
  if (entries_.count(hash)) return;
  entries_[hash] = result;
  // Only definitive verdicts are worth keeping across runs; a timeout or
  // crash might resolve with a different solver or a longer budget.
  if (path_.empty() || (result.status != "sat" && result.status != "unsat")) return;
  std::ofstream out(path_, std::ios::app);
  out << hash << '\t' << result.status << '\t' << encode_model(result.model) << '\n';
}

size_t QueryCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

}  // namespace symdl
