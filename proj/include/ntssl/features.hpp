#pragma once

// Per-transaction traffic counters: Inv sent by the target, Getdata received
// by the target, their ratio and sum, plus an optional anomaly score column.

#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ntssl/common.hpp"
#include "ntssl/wiremsg.hpp"

namespace ntssl::features {

struct FeatureRow {
  Hash32 tx_hash;
  std::uint32_t inv_num = 0;
  std::uint32_t getdata_num = 0;
  double ratio = 0;
  std::uint32_t sum = 0;
  std::optional<double> score;

  static FeatureRow from_counts(const Hash32& tx, std::uint32_t inv, std::uint32_t getdata) {
    FeatureRow row;
    row.tx_hash = tx;
    row.inv_num = inv;
    row.getdata_num = getdata;
    row.ratio = inv > 0 ? static_cast<double>(getdata) / inv : 0.0;
    row.sum = inv + getdata;
    return row;
  }

  // Numeric view in column order inv, getdata, ratio, sum[, score].
  std::vector<double> values() const {
    std::vector<double> v{static_cast<double>(inv_num), static_cast<double>(getdata_num), ratio,
                          static_cast<double>(sum)};
    if (score) v.push_back(*score);
    return v;
  }

  bool operator==(const FeatureRow&) const = default;
};

class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(std::size_t dim) : dim_(dim) {
    if (dim != 4 && dim != 5) throw UsageError("feature matrix dimension must be 4 or 5");
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  const FeatureRow& operator[](std::size_t i) const { return rows_[i]; }
  std::span<const FeatureRow> rows() const { return rows_; }

  void push_back(FeatureRow row) {
    if ((dim_ == 5) != row.score.has_value()) throw UsageError("row dimension does not match matrix");
    if (!index_.emplace(row.tx_hash, rows_.size()).second) {
      throw DataError("duplicate tx hash in feature matrix: " + row.tx_hash.hex());
    }
    rows_.push_back(std::move(row));
  }

  std::optional<std::size_t> find(const Hash32& tx) const {
    const auto it = index_.find(tx);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  // Dense row-major copy for the learners.
  std::vector<double> dense() const {
    std::vector<double> out;
    out.reserve(rows_.size() * dim_);
    for (const auto& r : rows_) {
      const auto v = r.values();
      out.insert(out.end(), v.begin(), v.end());
    }
    return out;
  }

  FeatureMatrix subset(std::span<const std::size_t> indices) const {
    FeatureMatrix out(dim_);
    for (auto i : indices) out.push_back(rows_[i]);
    return out;
  }

  bool operator==(const FeatureMatrix& o) const { return dim_ == o.dim_ && rows_ == o.rows_; }

 private:
  std::size_t dim_ = 4;
  std::vector<FeatureRow> rows_;
  std::unordered_map<Hash32, std::size_t, Hash32Hasher> index_;
};

// Rows appear in order of each hash's first record.
inline FeatureMatrix aggregate(std::span<const wiremsg::TraceRecord> trace) {
  using wiremsg::Direction;
  using wiremsg::MsgKind;
  struct Counts {
    std::uint32_t inv = 0;
    std::uint32_t getdata = 0;
  };
  std::vector<Hash32> order;
  std::unordered_map<Hash32, Counts, Hash32Hasher> counts;
  for (const auto& r : trace) {
    auto [it, inserted] = counts.try_emplace(r.tx_hash);
    if (inserted) order.push_back(r.tx_hash);
    if (r.direction == Direction::sent_by_target && r.msg == MsgKind::inv) ++it->second.inv;
    if (r.direction == Direction::received_by_target && r.msg == MsgKind::getdata) ++it->second.getdata;
  }
  FeatureMatrix m(4);
  for (const auto& h : order) {
    const auto& c = counts.at(h);
    m.push_back(FeatureRow::from_counts(h, c.inv, c.getdata));
  }
  return m;
}

inline FeatureMatrix augment(const FeatureMatrix& matrix, std::span<const double> scores) {
  if (matrix.dim() != 4) throw UsageError("augment expects a 4-column matrix");
  if (scores.size() != matrix.size()) {
    throw UsageError("augment: " + std::to_string(scores.size()) + " scores for " + std::to_string(matrix.size()) +
                     " rows");
  }
  FeatureMatrix out(5);
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    auto row = matrix[i];
    row.score = scores[i];
    out.push_back(std::move(row));
  }
  return out;
}

// Drops the score column.
inline FeatureMatrix base_features(const FeatureMatrix& matrix) {
  FeatureMatrix out(4);
  for (auto row : matrix.rows()) {
    row.score.reset();
    out.push_back(std::move(row));
  }
  return out;
}

inline void write_features(const FeatureMatrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write feature file: " + path);
  out << (m.dim() == 5 ? "tx,inv,getdata,ratio,sum,score\n" : "tx,inv,getdata,ratio,sum\n");
  for (const auto& r : m.rows()) {
    out << r.tx_hash.hex() << ',' << r.inv_num << ',' << r.getdata_num << ',' << format_double(r.ratio) << ','
        << r.sum;
    if (r.score) out << ',' << format_double(*r.score);
    out << '\n';
  }
}

inline FeatureMatrix read_features(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open feature file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": missing header");
  const auto header = trim(line);
  std::size_t dim = 0;
  if (header == "tx,inv,getdata,ratio,sum") dim = 4;
  else if (header == "tx,inv,getdata,ratio,sum,score") dim = 5;
  else throw DataError(path + ": unexpected header");
  FeatureMatrix m(dim);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(trim(line), ',');
    auto fail = [&] { return DataError(path + ":" + std::to_string(line_no) + ": malformed row"); };
    if (cells.size() != dim + 1) throw fail();
    const auto h = Hash32::from_hex(cells[0]);
    const auto inv = parse_u64(cells[1]);
    const auto gd = parse_u64(cells[2]);
    const auto sum = parse_u64(cells[4]);
    if (!h || !inv || !gd || !sum || *sum != *inv + *gd) throw fail();
    auto row = FeatureRow::from_counts(*h, static_cast<std::uint32_t>(*inv), static_cast<std::uint32_t>(*gd));
    if (dim == 5) {
      const auto s = parse_double(cells[5]);
      if (!s) throw fail();
      row.score = *s;
    }
    m.push_back(std::move(row));
  }
  return m;
}

}  // namespace ntssl::features
