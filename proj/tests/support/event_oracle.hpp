#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

namespace reactor::testing {

/// Brute-force event-algebra oracle. Works on a deliberately primitive
/// representation (type name + integer timestamp) and enumerates candidate
/// occurrence tuples exhaustively, applying the operator definitions
/// literally — an independent check of the engine's compositional detector.
/// No terminator declarations are modelled: the oracle corpus never declares
/// terminates/3 (the broken axiom has its own hand-derived tests).
struct OracleOcc {
  std::string type;
  int time = 0;
};

struct OracleExpr {
  std::string op;  // leaf|sequence|or|xor|and|concurrent|neg|any|aperiodic
  std::string leaf;
  int n = 0;                          // any
  std::vector<std::string> types;     // neg
  std::vector<OracleExpr> children;   // operator children / window legs

  static OracleExpr leaf_of(std::string t) {
    OracleExpr e;
    e.op = "leaf";
    e.leaf = std::move(t);
    return e;
  }
  static OracleExpr node(std::string op, std::vector<OracleExpr> children) {
    OracleExpr e;
    e.op = std::move(op);
    e.children = std::move(children);
    return e;
  }
  static OracleExpr negated(std::vector<std::string> types, OracleExpr e1, OracleExpr e2) {
    OracleExpr e;
    e.op = "neg";
    e.types = std::move(types);
    e.children = {std::move(e1), std::move(e2)};
    return e;
  }
  static OracleExpr some(int n, OracleExpr child) {
    OracleExpr e;
    e.op = "any";
    e.n = n;
    e.children = {std::move(child)};
    return e;
  }
  static OracleExpr aperiodic(OracleExpr event, OracleExpr e1, OracleExpr e2) {
    OracleExpr e;
    e.op = "aperiodic";
    e.children = {std::move(event), std::move(e1), std::move(e2)};
    return e;
  }
};

/// (interval start, interval end, sorted contributor timestamps)
struct OracleDet {
  int start = 0;
  int end = 0;
  std::vector<int> contributors;

  bool operator<(const OracleDet& o) const {
    if (start != o.start) return start < o.start;
    if (end != o.end) return end < o.end;
    return contributors < o.contributors;
  }
  bool operator==(const OracleDet& o) const {
    return start == o.start && end == o.end && contributors == o.contributors;
  }
};

inline std::vector<OracleDet> oracle_detect(const OracleExpr& e,
                                            const std::vector<OracleOcc>& eis) {
  auto leaf_dets = [&](const std::string& type) {
    std::vector<OracleDet> out;
    for (const auto& o : eis)
      if (o.type == type) out.push_back(OracleDet{o.time, o.time, {o.time}});
    return out;
  };
  auto merge = [](const OracleDet& a, const OracleDet& b, int start, int end) {
    OracleDet d;
    d.start = start;
    d.end = end;
    d.contributors = a.contributors;
    d.contributors.insert(d.contributors.end(), b.contributors.begin(), b.contributors.end());
    std::sort(d.contributors.begin(), d.contributors.end());
    return d;
  };
  auto pointwise_leq = [](const OracleDet& a, const OracleDet& b) {
    return a.start <= b.start && a.end <= b.end;
  };

  if (e.op == "leaf") return leaf_dets(e.leaf);

  std::vector<std::vector<OracleDet>> kids;
  for (const auto& c : e.children) kids.push_back(oracle_detect(c, eis));

  if (e.op == "sequence") {
    std::vector<OracleDet> acc = kids[0];
    for (std::size_t i = 1; i < kids.size(); ++i) {
      std::vector<OracleDet> next;
      for (const auto& l : acc)
        for (const auto& r : kids[i])
          if (pointwise_leq(l, r)) next.push_back(merge(l, r, l.start, r.end));
      acc = std::move(next);
    }
    return acc;
  }
  if (e.op == "or") {
    std::vector<OracleDet> out;
    for (const auto& k : kids) out.insert(out.end(), k.begin(), k.end());
    return out;
  }
  if (e.op == "xor") {
    std::vector<OracleDet> only;
    int nonempty = 0;
    for (const auto& k : kids)
      if (!k.empty()) {
        ++nonempty;
        only = k;
      }
    return nonempty == 1 ? only : std::vector<OracleDet>{};
  }
  if (e.op == "and" || e.op == "concurrent") {
    std::vector<OracleDet> acc = kids[0];
    for (std::size_t i = 1; i < kids.size(); ++i) {
      std::vector<OracleDet> next;
      for (const auto& l : acc)
        for (const auto& r : kids[i]) {
          if (e.op == "concurrent" && !(l.start == r.start && l.end == r.end)) continue;
          next.push_back(merge(l, r, std::min(l.start, r.start), std::max(l.end, r.end)));
        }
      acc = std::move(next);
    }
    return acc;
  }
  if (e.op == "neg") {
    std::vector<OracleDet> out;
    for (const auto& w1 : kids[0])
      for (const auto& w2 : kids[1]) {
        if (!pointwise_leq(w1, w2)) continue;
        // strictly inside the detected [E1,E2] interval
        bool violated = false;
        for (const auto& o : eis) {
          if (!(w1.start < o.time && o.time < w2.end)) continue;
          for (const auto& t : e.types)
            if (o.type == t) violated = true;
        }
        if (!violated) out.push_back(merge(w1, w2, w1.start, w2.end));
      }
    return out;
  }
  if (e.op == "any") {
    const auto& singles = kids[0];
    std::vector<OracleDet> out;
    const int n = e.n;
    if (static_cast<int>(singles.size()) < n) return out;
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    while (true) {
      OracleDet d;
      d.start = singles[static_cast<std::size_t>(idx[0])].start;
      d.end = singles[static_cast<std::size_t>(idx[0])].end;
      for (int i : idx) {
        const auto& s = singles[static_cast<std::size_t>(i)];
        d.start = std::min(d.start, s.start);
        d.end = std::max(d.end, s.end);
        d.contributors.insert(d.contributors.end(), s.contributors.begin(), s.contributors.end());
      }
      std::sort(d.contributors.begin(), d.contributors.end());
      out.push_back(std::move(d));
      int k = n;
      while (k > 0 &&
             idx[static_cast<std::size_t>(k - 1)] ==
                 static_cast<int>(singles.size()) - n + (k - 1))
        --k;
      if (k == 0) break;
      ++idx[static_cast<std::size_t>(k - 1)];
      for (int j = k; j < n; ++j)
        idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
    return out;
  }
  if (e.op == "aperiodic") {
    std::vector<OracleDet> out;
    for (const auto& w1 : kids[1])
      for (const auto& w2 : kids[2]) {
        if (!pointwise_leq(w1, w2)) continue;
        for (const auto& mid : kids[0]) {
          if (w1.start < mid.start && mid.end < w2.end) {
            OracleDet d = mid;
            for (const auto& extra : {w1, w2})
              d.contributors.insert(d.contributors.end(), extra.contributors.begin(),
                                    extra.contributors.end());
            std::sort(d.contributors.begin(), d.contributors.end());
            out.push_back(std::move(d));
          }
        }
      }
    return out;
  }
  return {};
}

/// Snoop-style semantics: a complex event occurs at the detection time of
/// its terminating event (a point, not an interval). Sequence requires
/// strictly increasing detection times. This reproduces the irregularity the
/// interval semantics fixes.
inline std::vector<int> snoop_detect_times(const OracleExpr& e, const std::vector<OracleOcc>& eis) {
  if (e.op == "leaf") {
    std::vector<int> out;
    for (const auto& o : eis)
      if (o.type == e.leaf) out.push_back(o.time);
    return out;
  }
  if (e.op == "sequence") {
    std::vector<int> acc = snoop_detect_times(e.children[0], eis);
    for (std::size_t i = 1; i < e.children.size(); ++i) {
      std::vector<int> next;
      for (int l : acc)
        for (int r : snoop_detect_times(e.children[i], eis))
          if (l < r) next.push_back(r);
      std::sort(next.begin(), next.end());
      next.erase(std::unique(next.begin(), next.end()), next.end());
      acc = std::move(next);
    }
    return acc;
  }
  return {};
}

}  // namespace reactor::testing
