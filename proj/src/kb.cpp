#include "reactor/kb.hpp"

#include <atomic>
#include <cctype>
#include <fstream>
#include <sstream>

#include "httplib.h"

namespace reactor {

namespace {
std::atomic<std::uint64_t> g_lineage{1};

std::string substitute_placeholders(std::string_view text, const std::vector<Term>& args) {
  if (args.empty()) return std::string(text);
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    char c = text[i];
    if (c == '_' && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
      std::size_t j = i + 1;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      bool word_end = j >= text.size() ||
                      (!std::isalnum(static_cast<unsigned char>(text[j])) && text[j] != '_');
      if (word_end) {
        std::size_t idx = std::stoul(std::string(text.substr(i + 1, j - i - 1)));
        if (idx < args.size()) {
          out += format_term(args[idx]);
          i = j;
          continue;
        }
      }
    }
    out.push_back(c);
    ++i;
  }
  return out;
}

bool is_locator(const std::string& s) {
  if (s.rfind("http://", 0) == 0 || s.rfind("https://", 0) == 0) return true;
  if (s.rfind("./", 0) == 0 || s.rfind("../", 0) == 0 || s.rfind("/", 0) == 0) return true;
  auto dot = s.rfind('.');
  if (dot != std::string::npos) {
    std::string ext = s.substr(dot);
    if (ext == ".rr" || ext == ".prova") return true;
  }
  return false;
}
}  // namespace

KnowledgeBase::KnowledgeBase() : lineage_(g_lineage.fetch_add(1)) {}

std::size_t KnowledgeBase::index_of(const std::string& key) const {
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].key == key) return i;
  return entries_.size();
}

void KnowledgeBase::insert_entry(const Term& oid, std::shared_ptr<const SourceModule> mod,
                                 std::size_t pos, TransitionRecord::Polarity pol) {
  TransitionRecord rec;
  rec.seq = next_seq_++;
  rec.polarity = pol;
  rec.oid = oid;
  rec.payload = mod;
  rec.position = pos;
  log_.push_back(rec);
  if (pol == TransitionRecord::Polarity::Positive) {
    Entry e{oid, format_term(oid), std::move(mod)};
    if (pos >= entries_.size())
      entries_.push_back(std::move(e));
    else
      entries_.insert(entries_.begin() + static_cast<std::ptrdiff_t>(pos), std::move(e));
  } else {
    entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(pos));
  }
}

void KnowledgeBase::add_module(const Term& oid, SourceModule mod, bool replace) {
  const std::string key = format_term(oid);
  std::size_t existing = index_of(key);
  if (existing != entries_.size()) {
    if (!replace) throw KbError(KbError::Kind::DuplicateOid, "duplicate module oid " + key);
    insert_entry(oid, entries_[existing].mod, existing, TransitionRecord::Polarity::Negative);
  }
  mod.oid = oid;
  insert_entry(oid, std::make_shared<SourceModule>(std::move(mod)), entries_.size(),
               TransitionRecord::Polarity::Positive);
}

void KnowledgeBase::add_module_text(const Term& oid, std::string_view text,
                                    const std::vector<Term>& args, bool replace) {
  const std::string source = substitute_placeholders(text, args);
  SourceModule parsed = parse_program(source, oid);

  // Facts whose head is an update primitive run as nested updates.
  SourceModule stored;
  stored.oid = oid;
  std::vector<Clause> nested;
  for (auto& c : parsed.clauses) {
    const auto [f, a] = c.head.predicate_indicator();
    const bool update_head =
        (f == "add" && a >= 1 && a <= 3) || (f == "remove" && a == 1) || (f == "update" && a == 3);
    if (c.is_fact() && update_head)
      nested.push_back(c);
    else
      stored.clauses.push_back(std::move(c));
  }
  add_module(oid, std::move(stored), replace);
  for (const auto& c : nested) {
    UpdateRequest u;
    const auto [f, a] = c.head.predicate_indicator();
    const auto& as = c.head.args();
    if (f == "remove") {
      u.kind = UpdateRequest::Kind::Remove;
      u.oid = as[0];
    } else {
      u.kind = f == "update" ? UpdateRequest::Kind::Update : UpdateRequest::Kind::Add;
      if (a == 1) {
        if (as[0].kind() != TermKind::Constant)
          throw KbError(KbError::Kind::NotFound, "add/1 expects text or locator");
        u.text = as[0].symbol();
        u.is_locator = is_locator(u.text);
      } else {
        u.oid = as[0];
        u.text = as[1].kind() == TermKind::Constant ? as[1].symbol() : format_term(as[1]);
        if (a == 3) {
          const Term& argterm = as[2];
          if (argterm.kind() == TermKind::List)
            u.args = argterm.items();
        }
      }
    }
    apply_update(u);
  }
}

Term KnowledgeBase::add_anonymous(std::string_view text, const std::vector<Term>& args) {
  Term oid = Term::compound("auto", {Term::integer(static_cast<std::int64_t>(++auto_counter_))});
  add_module_text(oid, text, args);
  return oid;
}

void KnowledgeBase::remove_module(const Term& oid) {
  const std::string key = format_term(oid);
  std::size_t pos = index_of(key);
  if (pos == entries_.size()) throw KbError(KbError::Kind::UnknownOid, "unknown module oid " + key);
  insert_entry(oid, entries_[pos].mod, pos, TransitionRecord::Polarity::Negative);
}

void KnowledgeBase::update_module(const Term& oid, std::string_view text,
                                  const std::vector<Term>& args) {
  const std::string key = format_term(oid);
  std::size_t pos = index_of(key);
  if (pos != entries_.size())
    insert_entry(oid, entries_[pos].mod, pos, TransitionRecord::Polarity::Negative);
  add_module_text(oid, text, args);
}

void KnowledgeBase::import_module(const std::string& locator) {
  std::string text = resolve_import(locator);
  add_module_text(Term::atom(locator), text);
}

bool KnowledgeBase::has_module(const Term& oid) const {
  return index_of(format_term(oid)) != entries_.size();
}

const SourceModule* KnowledgeBase::find_module(const Term& oid) const {
  std::size_t pos = index_of(format_term(oid));
  return pos == entries_.size() ? nullptr : entries_[pos].mod.get();
}

std::vector<Term> KnowledgeBase::module_oids() const {
  std::vector<Term> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.oid);
  return out;
}

std::vector<KnowledgeBase::ClauseRef> KnowledgeBase::clauses_for(const std::string& functor,
                                                                 std::size_t arity) const {
  std::vector<ClauseRef> out;
  for (std::size_t mi = 0; mi < entries_.size(); ++mi) {
    const auto& mod = *entries_[mi].mod;
    for (std::size_t ci = 0; ci < mod.clauses.size(); ++ci) {
      const auto [f, a] = mod.clauses[ci].head.predicate_indicator();
      if (f == functor && a == arity)
        out.push_back(ClauseRef{entries_[mi].oid, mi, ci, &mod.clauses[ci]});
    }
  }
  return out;
}

std::vector<KnowledgeBase::ClauseRef> KnowledgeBase::all_clauses() const {
  std::vector<ClauseRef> out;
  for (std::size_t mi = 0; mi < entries_.size(); ++mi) {
    const auto& mod = *entries_[mi].mod;
    for (std::size_t ci = 0; ci < mod.clauses.size(); ++ci)
      out.push_back(ClauseRef{entries_[mi].oid, mi, ci, &mod.clauses[ci]});
  }
  return out;
}

std::vector<IntegrityConstraint> KnowledgeBase::integrity_constraints() const {
  std::vector<IntegrityConstraint> out;
  for (const auto& ref : clauses_for("integrity", 2)) {
    if (!ref.clause->is_fact()) continue;
    const auto& args = ref.clause->head.args();
    if (args[0].kind() != TermKind::Constant) continue;
    IntegrityConstraint ic;
    if (args[0].symbol() == "must_hold")
      ic.mode = IntegrityConstraint::Mode::MustHold;
    else if (args[0].symbol() == "must_fail")
      ic.mode = IntegrityConstraint::Mode::MustFail;
    else
      continue;
    ic.goal = args[1];
    out.push_back(ic);
  }
  return out;
}

void KnowledgeBase::apply_update(const UpdateRequest& u) {
  switch (u.kind) {
    case UpdateRequest::Kind::Add:
      if (u.is_locator) {
        import_module(u.text);
      } else if (u.oid) {
        add_module_text(*u.oid, u.text, u.args);
      } else {
        add_anonymous(u.text, u.args);
      }
      return;
    case UpdateRequest::Kind::Remove:
      remove_module(*u.oid);
      return;
    case UpdateRequest::Kind::Update:
      update_module(*u.oid, u.text, u.args);
      return;
  }
}

TransactionOutcome KnowledgeBase::run_transaction(const std::vector<UpdateRequest>& updates,
                                                  const std::vector<IntegrityConstraint>& extra_ics,
                                                  const GoalProver& prove) {
  TransactionOutcome out;
  KbMarker marker = checkpoint();
  const std::size_t log_base = log_.size();
  try {
    for (const auto& u : updates) apply_update(u);
  } catch (const std::exception& e) {
    rollback_to(marker);
    out.committed = false;
    out.reason = e.what();
    return out;
  }
  auto ics = integrity_constraints();
  ics.insert(ics.end(), extra_ics.begin(), extra_ics.end());
  for (const auto& ic : ics) {
    bool holds = prove ? prove(ic.goal) : true;
    bool ok = ic.mode == IntegrityConstraint::Mode::MustHold ? holds : !holds;
    if (!ok) {
      rollback_to(marker);
      out.committed = false;
      out.reason = std::string("integrity violation: ") +
                   (ic.mode == IntegrityConstraint::Mode::MustHold ? "must_hold " : "must_fail ") +
                   format_term(ic.goal);
      return out;
    }
  }
  out.committed = true;
  for (std::size_t i = log_base; i < log_.size(); ++i) out.transitions.push_back(log_[i].seq);
  return out;
}

KbMarker KnowledgeBase::checkpoint() const { return KbMarker{next_seq_ - 1, lineage_}; }

void KnowledgeBase::invert(const TransitionRecord& rec) {
  if (rec.polarity == TransitionRecord::Polarity::Positive) {
    // the added module sits where it was inserted; find it by key
    std::size_t pos = index_of(format_term(rec.oid));
    entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(pos));
  } else {
    Entry e{rec.oid, format_term(rec.oid), rec.payload};
    std::size_t pos = std::min(rec.position, entries_.size());
    entries_.insert(entries_.begin() + static_cast<std::ptrdiff_t>(pos), std::move(e));
  }
}

void KnowledgeBase::rollback_to(const KbMarker& m) {
  if (m.lineage != lineage_)
    throw KbError(KbError::Kind::StaleMarker, "marker from another KB lineage");
  if (m.seq < sealed_)
    throw KbError(KbError::Kind::StaleMarker, "marker predates a committed seal");
  while (!log_.empty() && log_.back().seq > m.seq) {
    invert(log_.back());
    log_.pop_back();
  }
}

void KnowledgeBase::seal() { sealed_ = next_seq_ - 1; }

void KnowledgeBase::replay(const std::vector<TransitionRecord>& delta) {
  for (const auto& rec : delta) {
    if (rec.polarity == TransitionRecord::Polarity::Positive) {
      SourceModule copy = *rec.payload;
      std::size_t pos = index_of(format_term(rec.oid));
      if (pos != entries_.size())
        insert_entry(rec.oid, entries_[pos].mod, pos, TransitionRecord::Polarity::Negative);
      insert_entry(rec.oid, std::make_shared<SourceModule>(std::move(copy)), entries_.size(),
                   TransitionRecord::Polarity::Positive);
    } else {
      std::size_t pos = index_of(format_term(rec.oid));
      if (pos == entries_.size()) continue;  // already gone: last writer won
      insert_entry(rec.oid, entries_[pos].mod, pos, TransitionRecord::Polarity::Negative);
    }
  }
}

KnowledgeBase KnowledgeBase::snapshot() const { return *this; }

bool KnowledgeBase::deep_equals(const KnowledgeBase& o) const {
  return fingerprint() == o.fingerprint();
}

std::string KnowledgeBase::fingerprint() const {
  std::ostringstream os;
  for (const auto& e : entries_) {
    os << "%% module " << e.key << "\n" << format_module(*e.mod);
  }
  return os.str();
}

std::string resolve_import(const std::string& locator) {
  if (locator.rfind("http://", 0) == 0 || locator.rfind("https://", 0) == 0) {
    std::string rest = locator.substr(locator.find("//") + 2);
    auto slash = rest.find('/');
    std::string host = slash == std::string::npos ? rest : rest.substr(0, slash);
    std::string path = slash == std::string::npos ? "/" : rest.substr(slash);
    std::string scheme_host = locator.substr(0, locator.find("//") + 2) + host;
    httplib::Client cli(scheme_host);
    cli.set_connection_timeout(5);
    auto res = cli.Get(path);
    if (!res)
      throw KbError(KbError::Kind::FetchError,
                    "fetch failed for " + locator + ": " + httplib::to_string(res.error()));
    if (res->status != 200)
      throw KbError(KbError::Kind::FetchError,
                    "fetch failed for " + locator + ": HTTP " + std::to_string(res->status));
    return res->body;
  }
  std::ifstream in(locator, std::ios::binary);
  if (!in) throw KbError(KbError::Kind::NotFound, "module not found: " + locator);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace reactor
