#include "reactor/term.hpp"

#include <stdexcept>

namespace reactor {

struct Term::Rep {
  TermKind kind;
  VarId var;                 // Variable
  std::string text;          // Constant symbol / Compound functor
  bool string_flag = false;  // Constant presentation
  std::int64_t ival = 0;     // Int / TimePoint millis
  double fval = 0.0;         // Float
  std::vector<Term> args;    // Compound args / List items
  std::optional<Term> tail;  // List tail variable
  std::shared_ptr<const Annotations> meta;
};

Term::Term() {
  static const std::shared_ptr<const Rep> rep = [] {
    auto r = std::make_shared<Rep>();
    r->kind = TermKind::Constant;
    r->text = "undef";
    return std::shared_ptr<const Rep>(std::move(r));
  }();
  rep_ = rep;
}

Term Term::var(std::string name, int index) {
  auto r = std::make_shared<Rep>();
  r->kind = TermKind::Variable;
  r->var = VarId{std::move(name), index};
  return Term(std::move(r));
}

Term Term::atom(std::string symbol) {
  auto r = std::make_shared<Rep>();
  r->kind = TermKind::Constant;
  r->text = std::move(symbol);
  return Term(std::move(r));
}

Term Term::string(std::string text) {
  auto r = std::make_shared<Rep>();
  r->kind = TermKind::Constant;
  r->text = std::move(text);
  r->string_flag = true;
  return Term(std::move(r));
}

Term Term::integer(std::int64_t v) {
  auto r = std::make_shared<Rep>();
  r->kind = TermKind::Int;
  r->ival = v;
  return Term(std::move(r));
}

Term Term::real(double v) {
  auto r = std::make_shared<Rep>();
  r->kind = TermKind::Float;
  r->fval = v;
  return Term(std::move(r));
}

Term Term::time_point(std::int64_t epoch_millis) {
  auto r = std::make_shared<Rep>();
  r->kind = TermKind::TimePoint;
  r->ival = epoch_millis;
  return Term(std::move(r));
}

Term Term::compound(std::string functor, std::vector<Term> args) {
  if (args.empty()) return atom(std::move(functor));  // f() == f
  auto r = std::make_shared<Rep>();
  r->kind = TermKind::Compound;
  r->text = std::move(functor);
  r->args = std::move(args);
  return Term(std::move(r));
}

Term Term::list(std::vector<Term> items) {
  auto r = std::make_shared<Rep>();
  r->kind = TermKind::List;
  r->args = std::move(items);
  return Term(std::move(r));
}

Term Term::list(std::vector<Term> items, Term tail_var) {
  auto r = std::make_shared<Rep>();
  r->kind = TermKind::List;
  r->args = std::move(items);
  r->tail = std::move(tail_var);
  return Term(std::move(r));
}

TermKind Term::kind() const { return rep_->kind; }

const VarId& Term::var_id() const { return rep_->var; }
const std::string& Term::symbol() const { return rep_->text; }
bool Term::is_string() const { return rep_->string_flag; }
std::int64_t Term::int_value() const { return rep_->ival; }
double Term::float_value() const { return rep_->fval; }
std::int64_t Term::epoch_millis() const { return rep_->ival; }
const std::string& Term::functor() const { return rep_->text; }
const std::vector<Term>& Term::args() const { return rep_->args; }
std::size_t Term::arity() const { return rep_->args.size(); }
const std::vector<Term>& Term::items() const { return rep_->args; }
const std::optional<Term>& Term::tail() const { return rep_->tail; }

std::pair<std::string, std::size_t> Term::predicate_indicator() const {
  switch (kind()) {
    case TermKind::Constant: return {symbol(), 0};
    case TermKind::Compound: return {functor(), arity()};
    default: return {"", 0};
  }
}

bool Term::is_ground() const {
  switch (kind()) {
    case TermKind::Variable: return false;
    case TermKind::Compound:
    case TermKind::List: {
      for (const auto& a : rep_->args)
        if (!a.is_ground()) return false;
      return !rep_->tail.has_value();
    }
    default: return true;
  }
}

void Term::collect_vars(std::vector<VarId>& out) const {
  switch (kind()) {
    case TermKind::Variable: {
      for (const auto& v : out)
        if (v == rep_->var) return;
      out.push_back(rep_->var);
      return;
    }
    case TermKind::Compound:
    case TermKind::List: {
      for (const auto& a : rep_->args) a.collect_vars(out);
      if (rep_->tail) rep_->tail->collect_vars(out);
      return;
    }
    default: return;
  }
}

bool Term::equals(const Term& o, bool with_meta) const {
  if (rep_ == o.rep_) return true;
  if (kind() != o.kind()) return false;
  switch (kind()) {
    case TermKind::Variable:
      if (!(rep_->var == o.rep_->var)) return false;
      break;
    case TermKind::Constant:
      if (rep_->text != o.rep_->text) return false;
      break;
    case TermKind::Int:
    case TermKind::TimePoint:
      if (rep_->ival != o.rep_->ival) return false;
      break;
    case TermKind::Float:
      if (rep_->fval != o.rep_->fval) return false;
      break;
    case TermKind::Compound:
      if (rep_->text != o.rep_->text) return false;
      [[fallthrough]];
    case TermKind::List: {
      if (rep_->args.size() != o.rep_->args.size()) return false;
      for (std::size_t i = 0; i < rep_->args.size(); ++i)
        if (!rep_->args[i].equals(o.rep_->args[i], with_meta)) return false;
      if (rep_->tail.has_value() != o.rep_->tail.has_value()) return false;
      if (rep_->tail && !rep_->tail->equals(*o.rep_->tail, with_meta)) return false;
      break;
    }
  }
  if (with_meta) {
    const Annotations* a = annotations();
    const Annotations* b = o.annotations();
    if ((a == nullptr) != (b == nullptr)) return false;
    if (a && *a != *b) return false;
  }
  return true;
}

Term Term::with_annotations(Annotations a) const {
  auto r = std::make_shared<Rep>(*rep_);
  r->meta = a.empty() ? nullptr : std::make_shared<const Annotations>(std::move(a));
  return Term(std::move(r));
}

const Term::Annotations* Term::annotations() const { return rep_->meta.get(); }

bool interval_leq(const TimeInterval& i1, const TimeInterval& i2) {
  return i1.start <= i2.start && i1.end <= i2.end;
}

// Days-from-civil (Howard Hinnant's algorithm), proleptic Gregorian.
namespace {
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y += (m <= 2);
}
}  // namespace

std::int64_t civil_to_epoch_millis(const CivilTime& c) {
  const std::int64_t days = days_from_civil(c.year, static_cast<unsigned>(c.month),
                                            static_cast<unsigned>(c.day));
  return ((days * 24 + c.hour) * 60 + c.minute) * 60000 + static_cast<std::int64_t>(c.second) * 1000;
}

CivilTime epoch_millis_to_civil(std::int64_t ms) {
  std::int64_t secs = ms / 1000;
  if (ms % 1000 != 0 && ms < 0) --secs;  // floor for negative times
  std::int64_t days = secs / 86400;
  std::int64_t rem = secs % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  std::int64_t y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  CivilTime c;
  c.year = static_cast<int>(y);
  c.month = static_cast<int>(m);
  c.day = static_cast<int>(d);
  c.hour = static_cast<int>(rem / 3600);
  c.minute = static_cast<int>((rem % 3600) / 60);
  c.second = static_cast<int>(rem % 60);
  return c;
}

std::optional<std::int64_t> datetime_term_to_epoch(const Term& t) {
  if (t.kind() == TermKind::TimePoint) return t.epoch_millis();
  if (t.kind() != TermKind::Compound || t.functor() != "datetime" || t.arity() != 6)
    return std::nullopt;
  std::int64_t f[6];
  for (int i = 0; i < 6; ++i) {
    if (t.args()[i].kind() != TermKind::Int) return std::nullopt;
    f[i] = t.args()[i].int_value();
  }
  CivilTime c{static_cast<int>(f[0]), static_cast<int>(f[1]), static_cast<int>(f[2]),
              static_cast<int>(f[3]), static_cast<int>(f[4]), static_cast<int>(f[5])};
  return civil_to_epoch_millis(c);
}

Term epoch_to_datetime_term(std::int64_t ms) {
  const CivilTime c = epoch_millis_to_civil(ms);
  return Term::compound("datetime",
                        {Term::integer(c.year), Term::integer(c.month), Term::integer(c.day),
                         Term::integer(c.hour), Term::integer(c.minute), Term::integer(c.second)});
}

std::optional<Term> BindingSet::lookup(const VarId& v) const {
  auto it = map_.find(v);
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

BindingSet BindingSet::bind(const VarId& v, Term t) const {
  BindingSet out = *this;
  out.map_.insert_or_assign(v, std::move(t));
  return out;
}

Term BindingSet::walk(const Term& t) const {
  Term cur = t;
  while (cur.kind() == TermKind::Variable) {
    auto next = lookup(cur.var_id());
    if (!next) return cur;
    cur = *next;
  }
  return cur;
}

Term BindingSet::apply(const Term& t) const {
  Term w = walk(t);
  switch (w.kind()) {
    case TermKind::Compound: {
      std::vector<Term> args;
      args.reserve(w.arity());
      for (const auto& a : w.args()) args.push_back(apply(a));
      Term out = Term::compound(w.functor(), std::move(args));
      if (w.annotations()) out = out.with_annotations(*w.annotations());
      return out;
    }
    case TermKind::List: {
      std::vector<Term> items;
      items.reserve(w.items().size());
      for (const auto& a : w.items()) items.push_back(apply(a));
      if (w.tail()) {
        Term tail = walk(*w.tail());
        if (tail.kind() == TermKind::List) {
          Term spliced = apply(tail);
          for (const auto& extra : spliced.items()) items.push_back(extra);
          if (spliced.tail()) return Term::list(std::move(items), *spliced.tail());
          return Term::list(std::move(items));
        }
        return Term::list(std::move(items), tail);
      }
      return Term::list(std::move(items));
    }
    default: return w;
  }
}

namespace {

bool occurs_in(const VarId& v, const Term& t, const BindingSet& b) {
  Term w = b.walk(t);
  switch (w.kind()) {
    case TermKind::Variable: return w.var_id() == v;
    case TermKind::Compound:
    case TermKind::List: {
      for (const auto& a : w.args())
        if (occurs_in(v, a, b)) return true;
      if (w.tail() && occurs_in(v, *w.tail(), b)) return true;
      return false;
    }
    default: return false;
  }
}

bool unify_rec(const Term& a, const Term& b, BindingSet& bs, bool occ);

bool bind_var(const Term& var, const Term& val, BindingSet& bs, bool occ) {
  if (val.kind() == TermKind::Variable && val.var_id() == var.var_id()) return true;
  if (occ && occurs_in(var.var_id(), val, bs)) return false;
  bs = bs.bind(var.var_id(), val);
  return true;
}

// Lists unify element-wise; a shorter list's tail variable absorbs the rest.
bool unify_lists(const Term& a, const Term& b, BindingSet& bs, bool occ) {
  const auto& ia = a.items();
  const auto& ib = b.items();
  const std::size_t n = std::min(ia.size(), ib.size());
  for (std::size_t i = 0; i < n; ++i)
    if (!unify_rec(ia[i], ib[i], bs, occ)) return false;

  auto rest = [](const Term& t, std::size_t from) {
    std::vector<Term> items(t.items().begin() + static_cast<std::ptrdiff_t>(from),
                            t.items().end());
    if (t.tail()) return Term::list(std::move(items), *t.tail());
    return Term::list(std::move(items));
  };

  if (ia.size() == ib.size()) {
    const bool ta = a.tail().has_value(), tb = b.tail().has_value();
    if (!ta && !tb) return true;
    if (ta && tb) return unify_rec(*a.tail(), *b.tail(), bs, occ);
    if (ta) return unify_rec(*a.tail(), Term::list({}), bs, occ);
    return unify_rec(*b.tail(), Term::list({}), bs, occ);
  }
  const Term& longer = ia.size() > ib.size() ? a : b;
  const Term& shorter = ia.size() > ib.size() ? b : a;
  if (!shorter.tail()) return false;
  return unify_rec(*shorter.tail(), rest(longer, n), bs, occ);
}

bool unify_rec(const Term& a0, const Term& b0, BindingSet& bs, bool occ) {
  Term a = bs.walk(a0);
  Term b = bs.walk(b0);
  if (a.kind() == TermKind::Variable) return bind_var(a, b, bs, occ);
  if (b.kind() == TermKind::Variable) return bind_var(b, a, bs, occ);

  // datetime(...) compounds and TimePoints denote the same value.
  if (a.kind() == TermKind::TimePoint && b.kind() == TermKind::Compound) {
    if (b.functor() == "datetime" && b.arity() == 6)
      return unify_rec(epoch_to_datetime_term(a.epoch_millis()), b, bs, occ);
    return false;
  }
  if (b.kind() == TermKind::TimePoint && a.kind() == TermKind::Compound)
    return unify_rec(b, a, bs, occ);

  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case TermKind::Constant: return a.symbol() == b.symbol();
    case TermKind::Int:
    case TermKind::TimePoint: return a.int_value() == b.int_value();
    case TermKind::Float: return a.float_value() == b.float_value();
    case TermKind::Compound: {
      if (a.functor() != b.functor() || a.arity() != b.arity()) return false;
      for (std::size_t i = 0; i < a.arity(); ++i)
        if (!unify_rec(a.args()[i], b.args()[i], bs, occ)) return false;
      return true;
    }
    case TermKind::List: return unify_lists(a, b, bs, occ);
    default: return false;
  }
}

}  // namespace

std::optional<BindingSet> unify(const Term& a, const Term& b, const BindingSet& seed,
                                bool occurs_check) {
  BindingSet bs = seed;
  if (!unify_rec(a, b, bs, occurs_check)) return std::nullopt;
  return bs;
}

}  // namespace reactor
