#pragma once

#include <random>

#include "reactor/term.hpp"

namespace reactor::testing {

/// Random ground terms for round-trip and unification properties.
class TermGen {
 public:
  explicit TermGen(unsigned seed) : rng_(seed) {}

  Term ground(int depth = 3) {
    switch (pick(depth > 0 ? 6 : 4)) {
      case 0: return Term::atom(atom_name());
      case 1: return Term::integer(int_dist_(rng_));
      case 2: return Term::string(string_text());
      case 3: return Term::time_point(std::abs(int_dist_(rng_)) % 4102444800000LL);
      case 4: {
        std::vector<Term> args;
        int n = 1 + pick(3);
        for (int i = 0; i < n; ++i) args.push_back(ground(depth - 1));
        return Term::compound(atom_name(), std::move(args));
      }
      default: {
        std::vector<Term> items;
        int n = pick(4);
        for (int i = 0; i < n; ++i) items.push_back(ground(depth - 1));
        return Term::list(std::move(items));
      }
    }
  }

  /// Possibly-open terms (with variables) for unification properties.
  Term open_term(int depth = 3) {
    if (pick(4) == 0) return Term::var(var_name());
    if (depth == 0) return ground(0);
    switch (pick(3)) {
      case 0: return ground(depth);
      case 1: {
        std::vector<Term> args;
        int n = 1 + pick(3);
        for (int i = 0; i < n; ++i) args.push_back(open_term(depth - 1));
        return Term::compound(atom_name(), std::move(args));
      }
      default: {
        std::vector<Term> items;
        int n = pick(3);
        for (int i = 0; i < n; ++i) items.push_back(open_term(depth - 1));
        if (pick(3) == 0) return Term::list(std::move(items), Term::var(var_name()));
        return Term::list(std::move(items));
      }
    }
  }

  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

  std::mt19937& rng() { return rng_; }

 private:
  std::string atom_name() {
    static const char* names[] = {"a", "b", "c", "foo", "bar", "every10Sec", "status",
                                  "x1", "k_2", "node.sub.name"};
    return names[pick(10)];
  }
  std::string var_name() {
    static const char* names[] = {"X", "Y", "Z", "Server", "T1"};
    return names[pick(5)];
  }
  std::string string_text() {
    static const char* texts[] = {"", "hello", "occurs(e,_0).", "line\nbreak", "quote\"inside",
                                  "back\\slash"};
    return texts[pick(6)];
  }

  std::mt19937 rng_;
  std::uniform_int_distribution<std::int64_t> int_dist_{-100000, 100000};
};

}  // namespace reactor::testing
