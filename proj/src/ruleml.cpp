#include "reactor/ruleml.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <map>

namespace reactor {

namespace {

[[noreturn]] void unsupported(const std::string& what) {
  throw RuleMLError(RuleMLError::Kind::Unsupported, what);
}

// ---------------------------------------------------------------------------
// export: terms -> elements
// ---------------------------------------------------------------------------

const std::map<std::string, std::string>& operator_elements() {
  static const std::map<std::string, std::string> m = {
      {"sequence", "Sequence"}, {"or", "Disjunction"},   {"and", "Conjunction"},
      {"xor", "Xor"},           {"concurrent", "Concurrent"}, {"neg", "Not"},
      {"any", "Any"},           {"aperiodic", "Aperiodic"},
      // action algebra, serialization only
      {"succession", "Succession"}, {"choice", "Choice"}, {"flow", "Flow"}, {"loop", "Loop"},
  };
  return m;
}

const std::map<std::string, std::string>& element_operators() {
  static const std::map<std::string, std::string> m = [] {
    std::map<std::string, std::string> out;
    for (const auto& [k, v] : operator_elements()) out[v] = k;
    out["Periodic"] = "periodic";  // parse-only
    return out;
  }();
  return m;
}

void put_annotations(const Term& t, XmlNode& node) {
  if (const auto* meta = t.annotations())
    for (const auto& [k, v] : *meta) node.attrs.emplace_back(k, v);
}

XmlNode encode_arg(const Term& t);
XmlNode encode_goal(const Term& t);

XmlNode encode_list(const Term& t) {
  // cons-cell chain: <Expr><Fun>.</Fun> head tail </Expr>, nil is <Ind>[]</Ind>
  XmlNode nil;
  nil.name = "Ind";
  nil.text = "[]";
  XmlNode tail = nil;
  if (t.tail()) tail = encode_arg(*t.tail());
  for (std::size_t i = t.items().size(); i-- > 0;) {
    XmlNode cell;
    cell.name = "Expr";
    XmlNode fun;
    fun.name = "Fun";
    fun.text = ".";
    cell.children.push_back(std::move(fun));
    cell.children.push_back(encode_arg(t.items()[i]));
    cell.children.push_back(std::move(tail));
    tail = std::move(cell);
  }
  return tail;
}

XmlNode encode_arg(const Term& t) {
  XmlNode node;
  switch (t.kind()) {
    case TermKind::Variable:
      node.name = "Var";
      node.text = t.var_id().name;
      break;
    case TermKind::Constant:
      if (t.is_string()) {
        node.name = "Data";
        node.attrs.emplace_back("type", "xsd:string");
        node.text = t.symbol();
      } else {
        node.name = "Ind";
        node.text = t.symbol();
      }
      break;
    case TermKind::Int:
      node.name = "Data";
      node.text = std::to_string(t.int_value());
      break;
    case TermKind::Float:
      node.name = "Data";
      node.text = format_term(t);
      break;
    case TermKind::TimePoint:
      node.name = "Data";
      node.attrs.emplace_back("type", "time:millis");
      node.text = std::to_string(t.epoch_millis());
      break;
    case TermKind::List: return encode_list(t);
    case TermKind::Compound: {
      node.name = "Expr";
      XmlNode fun;
      fun.name = "Fun";
      fun.text = t.functor();
      node.children.push_back(std::move(fun));
      for (const auto& a : t.args()) node.children.push_back(encode_arg(a));
      break;
    }
  }
  put_annotations(t, node);
  return node;
}

// Event algebra operator trees; other terms fall back to goal encoding.
XmlNode encode_event(const Term& t) {
  const auto [f, a] = t.predicate_indicator();
  auto it = operator_elements().find(f);
  if (it == operator_elements().end() || t.kind() != TermKind::Compound) return encode_goal(t);
  XmlNode node;
  node.name = it->second;
  if (f == "neg" && a == 2 && t.args()[0].kind() == TermKind::List &&
      t.args()[1].kind() == TermKind::List && t.args()[1].items().size() == 2) {
    // neg([T1..Tn],[E1,E2]) flattens to types then the two window legs
    for (const auto& ty : t.args()[0].items()) node.children.push_back(encode_event(ty));
    for (const auto& w : t.args()[1].items()) node.children.push_back(encode_event(w));
    return node;
  }
  if (f == "aperiodic" && a == 2 && t.args()[1].kind() == TermKind::List &&
      t.args()[1].items().size() == 2) {
    node.children.push_back(encode_event(t.args()[0]));
    for (const auto& w : t.args()[1].items()) node.children.push_back(encode_event(w));
    return node;
  }
  if (f == "any" && a == 2) {
    node.children.push_back(encode_arg(t.args()[0]));
    node.children.push_back(encode_event(t.args()[1]));
    return node;
  }
  for (const auto& c : t.args()) node.children.push_back(encode_event(c));
  return node;
}

// A goal as an <Atom> (0-ary goals carry just the <Rel>).
XmlNode encode_goal(const Term& t) {
  if (t.kind() == TermKind::Constant && !t.is_string()) {
    XmlNode atom;
    atom.name = "Atom";
    XmlNode rel;
    rel.name = "Rel";
    rel.text = t.symbol();
    put_annotations(t, rel);
    atom.children.push_back(std::move(rel));
    return atom;
  }
  if (t.kind() == TermKind::Compound) {
    XmlNode atom;
    atom.name = "Atom";
    XmlNode rel;
    rel.name = "Rel";
    rel.text = t.functor();
    put_annotations(t, rel);
    atom.children.push_back(std::move(rel));
    for (const auto& a : t.args()) atom.children.push_back(encode_arg(a));
    return atom;
  }
  return encode_arg(t);
}

XmlNode encode_body_literal(const BodyLiteral& l) {
  if (l.kind == BodyLiteral::Kind::Cut) return encode_goal(Term::atom("!"));
  switch (l.polarity) {
    case BodyLiteral::Polarity::Naf: {
      XmlNode naf;
      naf.name = "Naf";
      naf.children.push_back(encode_goal(l.goal));
      return naf;
    }
    case BodyLiteral::Polarity::Neg: {
      XmlNode neg;
      neg.name = "Neg";
      neg.children.push_back(encode_goal(l.goal));
      return neg;
    }
    default: return encode_goal(l.goal);
  }
}

XmlNode encode_formula(const std::vector<BodyLiteral>& body) {
  if (body.size() == 1) return encode_body_literal(body[0]);
  XmlNode conj;
  conj.name = "And";
  for (const auto& l : body) conj.children.push_back(encode_body_literal(l));
  return conj;
}

// Message content: and/or compounds become And/Or of literal encodings,
// other compounds/constants read as atoms, everything else as plain terms.
XmlNode encode_content(const Term& t) {
  const auto [f, a] = t.predicate_indicator();
  if (t.kind() == TermKind::Compound && (f == "and" || f == "or")) {
    XmlNode node;
    node.name = f == "and" ? "And" : "Or";
    for (const auto& c : t.args()) node.children.push_back(encode_content(c));
    return node;
  }
  if (t.kind() == TermKind::Compound || (t.kind() == TermKind::Constant && !t.is_string()))
    return encode_goal(t);
  return encode_arg(t);
}

XmlNode encode_clause(const Clause& c) {
  if (c.is_fact()) return encode_goal(c.head);
  XmlNode node;
  node.name = "Implies";
  XmlNode head;
  head.name = "head";
  head.children.push_back(encode_goal(c.head));
  XmlNode body;
  body.name = "body";
  body.children.push_back(encode_formula(c.body));
  node.children.push_back(std::move(head));
  node.children.push_back(std::move(body));
  return node;
}

void add_part(XmlNode& rule, const char* tag, const std::optional<Term>& part, bool event_pos) {
  if (!part) return;
  XmlNode slot;
  slot.name = tag;
  slot.children.push_back(event_pos ? encode_event(*part) : encode_goal(*part));
  rule.children.push_back(std::move(slot));
}

XmlNode encode_rule(const XmlEcaRule& r) {
  XmlNode node;
  node.name = "Rule";
  node.attrs.emplace_back("execution", r.execution);
  if (!r.eval.empty()) node.attrs.emplace_back("eval", r.eval);
  if (r.oid) {
    XmlNode slot;
    slot.name = "oid";
    slot.children.push_back(encode_arg(*r.oid));
    node.children.push_back(std::move(slot));
  }
  if (r.label) {
    XmlNode slot;
    slot.name = "label";
    slot.children.push_back(encode_arg(*r.label));
    node.children.push_back(std::move(slot));
  }
  if (r.qualification) {
    XmlNode slot;
    slot.name = "qualification";
    slot.children.push_back(encode_arg(*r.qualification));
    node.children.push_back(std::move(slot));
  }
  add_part(node, "on", r.on, true);
  add_part(node, "if", r.if_, false);
  add_part(node, "then", r.then, false);
  add_part(node, "do", r.do_, false);
  add_part(node, "after", r.after, false);
  add_part(node, "else", r.else_, false);
  add_part(node, "elseDo", r.else_do, false);
  add_part(node, "elseAfter", r.else_after, false);
  return node;
}

XmlNode encode_message(const RuleMLMessage& m) {
  XmlNode node;
  node.name = "Message";
  node.attrs.emplace_back("mode", m.mode);
  if (!m.directive.empty()) node.attrs.emplace_back("directive", m.directive);
  auto slot = [&](const char* tag, const Term& t, bool content) {
    XmlNode s;
    s.name = tag;
    s.children.push_back(content ? encode_content(t) : encode_arg(t));
    node.children.push_back(std::move(s));
  };
  slot("oid", m.oid, false);
  slot("protocol", m.protocol, false);
  slot("sender", m.sender, false);
  if (m.receiver) slot("receiver", *m.receiver, false);
  slot("content", m.content, true);
  return node;
}

XmlNode encode_interface(const InterfaceDecl& d) {
  XmlNode atom;
  atom.name = "Atom";
  XmlNode rel;
  rel.name = "Rel";
  rel.text = "interface";
  atom.children.push_back(std::move(rel));
  if (d.signature.kind() != TermKind::Compound)
    throw RuleMLError(RuleMLError::Kind::Unserializable, "interface signature must be compound");
  XmlNode expr;
  expr.name = "Expr";
  XmlNode fun;
  fun.name = "Fun";
  fun.text = d.signature.functor();
  expr.children.push_back(std::move(fun));
  for (const auto& a : d.signature.args()) expr.children.push_back(encode_arg(a));
  atom.children.push_back(std::move(expr));
  XmlNode desc;
  desc.name = "Ind";
  desc.text = d.description;
  atom.children.push_back(std::move(desc));
  return atom;
}

XmlNode encode_query(const QueryItem& q) {
  XmlNode node;
  node.name = "Query";
  node.children.push_back(encode_formula(q.goals));
  return node;
}

bool contains_dotted_functor(const Term& t) {
  switch (t.kind()) {
    case TermKind::Compound: {
      if (t.functor().find('.') != std::string::npos) return true;
      for (const auto& a : t.args())
        if (contains_dotted_functor(a)) return true;
      return false;
    }
    case TermKind::List: {
      for (const auto& a : t.items())
        if (contains_dotted_functor(a)) return true;
      return false;
    }
    default: return false;
  }
}

XmlNode encode_item(const RuleMLItem& item) {
  return std::visit(
      [](const auto& v) -> XmlNode {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Clause>) {
          if (contains_dotted_functor(v.head))
            throw RuleMLError(RuleMLError::Kind::Unserializable,
                              "dotted stub functor in " + format_term(v.head));
          return encode_clause(v);
        } else if constexpr (std::is_same_v<T, XmlEcaRule>) {
          return encode_rule(v);
        } else if constexpr (std::is_same_v<T, RuleMLMessage>) {
          return encode_message(v);
        } else if constexpr (std::is_same_v<T, InterfaceDecl>) {
          return encode_interface(v);
        } else if constexpr (std::is_same_v<T, EventExprItem>) {
          return encode_event(v.expr);
        } else {
          return encode_query(v);
        }
      },
      item);
}

// ---------------------------------------------------------------------------
// import: elements -> terms
// ---------------------------------------------------------------------------

struct ImportScope {
  std::map<std::string, Term> vars;
  int index = next_global_var_index();

  Term var(const std::string& name) {
    auto it = vars.find(name);
    if (it != vars.end()) return it->second;
    Term v = Term::var(name, index);
    vars.emplace(name, v);
    return v;
  }
};

std::string trimmed(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

Term with_element_annotations(Term t, const XmlNode& node,
                              const std::vector<std::string>& consumed = {}) {
  Term::Annotations meta;
  for (const auto& [k, v] : node.attrs) {
    if (std::find(consumed.begin(), consumed.end(), k) != consumed.end()) continue;
    meta[k] = v;
  }
  if (meta.empty()) return t;
  return t.with_annotations(std::move(meta));
}

Term decode_arg(const XmlNode& node, ImportScope& scope);
Term decode_goal(const XmlNode& node, ImportScope& scope);
Term decode_event(const XmlNode& node, ImportScope& scope);

Term decode_expr(const XmlNode& node, ImportScope& scope) {
  const XmlNode* fun = node.child("Fun");
  if (!fun || node.children.front().name != "Fun")
    unsupported("Expr without a leading Fun child");
  std::vector<Term> args;
  for (std::size_t i = 1; i < node.children.size(); ++i)
    args.push_back(decode_arg(node.children[i], scope));
  std::string functor = trimmed(fun->text);
  // cons-cell chains decode back to lists
  if (functor == "." && args.size() == 2) {
    const Term& head = args[0];
    const Term& rest = args[1];
    std::vector<Term> items = {head};
    if (rest.kind() == TermKind::List) {
      for (const auto& x : rest.items()) items.push_back(x);
      Term out = rest.tail() ? Term::list(std::move(items), *rest.tail())
                             : Term::list(std::move(items));
      return with_element_annotations(out, node);
    }
    if (rest.kind() == TermKind::Variable)
      return with_element_annotations(Term::list(std::move(items), rest), node);
    unsupported("improper list tail in Expr '.'");
  }
  Term out = args.empty() ? Term::atom(functor) : Term::compound(functor, std::move(args));
  return with_element_annotations(out, node);
}

Term decode_data(const XmlNode& node, ImportScope&) {
  const std::string text = node.text;  // not trimmed: strings keep spacing
  const std::string* type = node.attr("type");
  if (type && *type == "xsd:string")
    return with_element_annotations(Term::string(text), node, {"type"});
  if (type && *type == "time:millis")
    return with_element_annotations(Term::time_point(std::stoll(trimmed(text))), node, {"type"});
  const std::string t = trimmed(text);
  if (!t.empty() && t.find_first_not_of("-0123456789") == std::string::npos)
    return with_element_annotations(Term::integer(std::stoll(t)), node);
  try {
    std::size_t used = 0;
    double d = std::stod(t, &used);
    if (used == t.size()) return with_element_annotations(Term::real(d), node);
  } catch (...) {
  }
  return with_element_annotations(Term::string(text), node);
}

Term decode_arg(const XmlNode& node, ImportScope& scope) {
  if (node.name == "Ind") {
    const std::string sym = trimmed(node.text);
    if (sym == "[]") return with_element_annotations(Term::list({}), node);
    return with_element_annotations(Term::atom(sym), node);
  }
  if (node.name == "Var") return with_element_annotations(scope.var(trimmed(node.text)), node);
  if (node.name == "Data") return decode_data(node, scope);
  if (node.name == "Expr") return decode_expr(node, scope);
  if (node.name == "Atom") return decode_goal(node, scope);
  if (element_operators().count(node.name)) return decode_event(node, scope);
  unsupported("unexpected element <" + node.name + "> in term position");
}

Term decode_goal(const XmlNode& node, ImportScope& scope) {
  if (node.name == "Atom") {
    const XmlNode* rel = node.child("Rel");
    if (!rel) unsupported("Atom without Rel");
    std::vector<Term> args;
    for (const auto& c : node.children) {
      if (&c == rel) continue;
      args.push_back(decode_arg(c, scope));
    }
    std::string functor = trimmed(rel->text);
    Term out = args.empty() ? Term::atom(functor) : Term::compound(functor, std::move(args));
    Term::Annotations meta;
    for (const auto& [k, v] : rel->attrs) meta[k] = v;
    if (!meta.empty()) out = out.with_annotations(std::move(meta));
    return out;
  }
  return decode_arg(node, scope);
}

Term decode_event(const XmlNode& node, ImportScope& scope) {
  auto it = element_operators().find(node.name);
  if (it == element_operators().end()) return decode_goal(node, scope);
  const std::string& op = it->second;
  std::vector<Term> children;
  for (const auto& c : node.children) children.push_back(decode_event(c, scope));
  if (op == "neg") {
    if (children.size() < 3) unsupported("Not needs negated types plus a two-leg window");
    std::vector<Term> types(children.begin(), children.end() - 2);
    Term window = Term::list({children[children.size() - 2], children.back()});
    return Term::compound("neg", {Term::list(std::move(types)), window});
  }
  if (op == "aperiodic") {
    if (children.size() != 3) unsupported("Aperiodic needs an event plus a two-leg window");
    return Term::compound("aperiodic",
                          {children[0], Term::list({children[1], children[2]})});
  }
  if (op == "any") {
    if (children.size() != 2) unsupported("Any needs a count and an event");
    return Term::compound("any", {children[0], children[1]});
  }
  return Term::compound(op, std::move(children));
}

std::vector<BodyLiteral> decode_formula(const XmlNode& node, ImportScope& scope);

BodyLiteral decode_body_literal(const XmlNode& node, ImportScope& scope) {
  if (node.name == "Naf") {
    if (node.children.size() != 1) unsupported("Naf with one child expected");
    return BodyLiteral::naf(decode_goal(node.children[0], scope));
  }
  if (node.name == "Neg") {
    if (node.children.size() != 1) unsupported("Neg with one child expected");
    return BodyLiteral::negated(decode_goal(node.children[0], scope));
  }
  Term goal = decode_goal(node, scope);
  if (goal.kind() == TermKind::Constant && goal.symbol() == "!") return BodyLiteral::cut();
  return BodyLiteral::positive(goal);
}

std::vector<BodyLiteral> decode_formula(const XmlNode& node, ImportScope& scope) {
  std::vector<BodyLiteral> out;
  if (node.name == "And") {
    for (const auto& c : node.children) {
      auto sub = decode_formula(c, scope);
      out.insert(out.end(), sub.begin(), sub.end());
    }
    return out;
  }
  out.push_back(decode_body_literal(node, scope));
  return out;
}

Term decode_content(const XmlNode& node, ImportScope& scope) {
  if (node.name == "And" || node.name == "Or") {
    std::vector<Term> parts;
    for (const auto& c : node.children) parts.push_back(decode_content(c, scope));
    return Term::compound(node.name == "And" ? "and" : "or", std::move(parts));
  }
  return decode_goal(node, scope);
}

std::optional<InterfaceDecl> try_decode_interface(const XmlNode& atom, ImportScope& scope) {
  const XmlNode* rel = atom.child("Rel");
  if (!rel || trimmed(rel->text) != "interface") return std::nullopt;
  const XmlNode* expr = atom.child("Expr");
  const XmlNode* desc = atom.child("Ind");
  if (!expr || !desc) return std::nullopt;
  InterfaceDecl d;
  d.signature = decode_expr(*expr, scope);
  d.description = trimmed(desc->text);
  return d;
}

RuleMLItem decode_rule(const XmlNode& node) {
  ImportScope scope;
  XmlEcaRule r;
  if (const auto* e = node.attr("execution")) r.execution = *e;
  if (const auto* e = node.attr("eval")) r.eval = *e;
  if (r.execution != "active" && r.execution != "messaging" && r.execution != "reasoning")
    unsupported("Rule execution must be active|messaging|reasoning");
  if (!r.eval.empty() && r.eval != "weak" && r.eval != "strong")
    unsupported("Rule eval must be weak|strong");
  auto part = [&](const char* tag, bool event_pos) -> std::optional<Term> {
    const XmlNode* slot = node.child(tag);
    if (!slot) return std::nullopt;
    if (slot->children.size() != 1) unsupported(std::string("<") + tag + "> with one child");
    return event_pos ? decode_event(slot->children[0], scope)
                     : decode_goal(slot->children[0], scope);
  };
  auto arg_part = [&](const char* tag) -> std::optional<Term> {
    const XmlNode* slot = node.child(tag);
    if (!slot) return std::nullopt;
    if (slot->children.size() != 1) unsupported(std::string("<") + tag + "> with one child");
    return decode_arg(slot->children[0], scope);
  };
  r.oid = arg_part("oid");
  r.label = arg_part("label");
  r.qualification = arg_part("qualification");
  r.on = part("on", true);
  r.if_ = part("if", false);
  r.then = part("then", false);
  r.do_ = part("do", false);
  r.after = part("after", false);
  r.else_ = part("else", false);
  r.else_do = part("elseDo", false);
  r.else_after = part("elseAfter", false);
  for (const auto& c : node.children) {
    static const std::vector<std::string> known = {"oid",   "label", "qualification", "on",
                                                   "if",    "then",  "do",            "after",
                                                   "else",  "elseDo", "elseAfter"};
    if (std::find(known.begin(), known.end(), c.name) == known.end())
      unsupported("unknown Rule part <" + c.name + ">");
  }
  return r;
}

RuleMLItem decode_message_item(const XmlNode& node) {
  ImportScope scope;
  RuleMLMessage m;
  if (const auto* a = node.attr("mode")) m.mode = *a;
  if (m.mode != "inbound" && m.mode != "outbound")
    unsupported("Message mode must be inbound|outbound");
  if (const auto* a = node.attr("directive")) m.directive = *a;
  auto slot = [&](const char* tag, bool required, bool content) -> std::optional<Term> {
    const XmlNode* s = node.child(tag);
    if (!s) {
      if (required) unsupported(std::string("Message without <") + tag + ">");
      return std::nullopt;
    }
    if (s->children.size() != 1) unsupported(std::string("<") + tag + "> with one child");
    return content ? decode_content(s->children[0], scope) : decode_arg(s->children[0], scope);
  };
  m.oid = *slot("oid", true, false);
  m.protocol = *slot("protocol", true, false);
  m.sender = *slot("sender", true, false);
  m.receiver = slot("receiver", false, false);
  m.content = *slot("content", true, true);
  return m;
}

RuleMLItem decode_implies(const XmlNode& node) {
  ImportScope scope;
  const XmlNode* head = node.child("head");
  const XmlNode* body = node.child("body");
  if (!head || !body || head->children.size() != 1 || body->children.size() != 1)
    unsupported("Implies needs one head and one body child");
  Clause c;
  c.head = decode_goal(head->children[0], scope);
  c.body = decode_formula(body->children[0], scope);
  return c;
}

RuleMLItem decode_item(const XmlNode& node) {
  if (node.name == "Rule") return decode_rule(node);
  if (node.name == "Message") return decode_message_item(node);
  if (node.name == "Implies") return decode_implies(node);
  if (node.name == "Atom") {
    ImportScope scope;
    if (auto iface = try_decode_interface(node, scope)) return *iface;
    Clause c;
    c.head = decode_goal(node, scope);
    return c;
  }
  if (node.name == "Query") {
    ImportScope scope;
    QueryItem q;
    if (node.children.size() != 1) unsupported("Query with one child expected");
    q.goals = decode_formula(node.children[0], scope);
    return q;
  }
  if (element_operators().count(node.name)) {
    ImportScope scope;
    return EventExprItem{decode_event(node, scope)};
  }
  unsupported("unknown element <" + node.name + ">");
}

}  // namespace

std::string ruleml_export(const RuleMLDocument& doc) {
  XmlNode root;
  root.name = "RuleML";
  for (const auto& item : doc.items) root.children.push_back(encode_item(item));
  return xml_write(root);
}

std::string ruleml_export_item(const RuleMLItem& item) { return xml_write(encode_item(item)); }

RuleMLDocument ruleml_import(const std::string& xml) {
  XmlNode root;
  try {
    root = xml_parse(xml);
  } catch (const XmlError& e) {
    throw RuleMLError(RuleMLError::Kind::Malformed, e.what());
  }
  RuleMLDocument doc;
  if (root.name == "RuleML") {
    for (const auto& c : root.children) doc.items.push_back(decode_item(c));
  } else {
    doc.items.push_back(decode_item(root));
  }
  return doc;
}

void ruleml_validate(const std::string& xml) { (void)ruleml_import(xml); }

RuleMLMessage to_ruleml_message(const Message& m, bool outbound) {
  RuleMLMessage out;
  out.mode = outbound ? "outbound" : "inbound";
  out.directive =
      m.performative.kind() == TermKind::Constant ? m.performative.symbol()
                                                  : format_term(m.performative);
  out.oid = m.xid;
  out.protocol = m.protocol;
  out.sender = m.sender;
  out.receiver = m.target;
  out.content = m.payload;
  return out;
}

Message from_ruleml_message(const RuleMLMessage& rm) {
  Message m;
  m.xid = rm.oid;
  m.protocol = rm.protocol;
  m.sender = rm.sender;
  m.target = rm.receiver ? *rm.receiver : Term::atom("self");
  m.performative = Term::atom(rm.directive.empty() ? "inform" : rm.directive);
  m.payload = rm.content;
  return m;
}

std::string message_to_xml(const Message& m, bool outbound) {
  return ruleml_export_item(to_ruleml_message(m, outbound));
}

Message message_from_xml(const std::string& xml) {
  RuleMLDocument doc = ruleml_import(xml);
  if (doc.items.size() != 1 || !std::holds_alternative<RuleMLMessage>(doc.items[0]))
    throw RuleMLError(RuleMLError::Kind::Unsupported, "a single Message element expected");
  return from_ruleml_message(std::get<RuleMLMessage>(doc.items[0]));
}

namespace {

std::optional<XmlEcaRule> eca_fact_to_rule(const Clause& c) {
  if (!c.is_fact()) return std::nullopt;
  const auto [f, a] = c.head.predicate_indicator();
  if (f != "eca" || (a != 2 && a != 3 && a != 4 && a != 6)) return std::nullopt;
  const auto& args = c.head.args();
  auto part = [&](std::size_t i) -> std::optional<Term> {
    if (i >= args.size()) return std::nullopt;
    if (args[i].kind() == TermKind::Variable) return std::nullopt;  // blank
    return args[i];
  };
  XmlEcaRule r;
  r.execution = "active";
  switch (a) {
    case 2:
      r.if_ = part(0);
      r.do_ = part(1);
      break;
    case 3:
      r.on = part(0);
      r.if_ = part(1);
      r.do_ = part(2);
      break;
    case 4:
      r.on = part(0);
      r.if_ = part(1);
      r.do_ = part(2);
      r.after = part(3);
      break;
    case 6:
      if (part(0)) return std::nullopt;  // time part has no <Rule> slot
      r.on = part(1);
      r.if_ = part(2);
      r.do_ = part(3);
      r.after = part(4);
      r.else_do = part(5);
      break;
  }
  return r;
}

}  // namespace

RuleMLDocument document_from_module(const SourceModule& mod) {
  RuleMLDocument doc;
  for (const auto& c : mod.clauses) {
    if (auto rule = eca_fact_to_rule(c)) {
      doc.items.push_back(*rule);
      continue;
    }
    doc.items.push_back(c);
  }
  return doc;
}

SourceModule module_from_document(const RuleMLDocument& doc, const Term& oid) {
  SourceModule mod;
  mod.oid = oid;
  for (const auto& item : doc.items) {
    if (std::holds_alternative<Clause>(item)) {
      mod.clauses.push_back(std::get<Clause>(item));
      continue;
    }
    if (std::holds_alternative<XmlEcaRule>(item)) {
      const auto& r = std::get<XmlEcaRule>(item);
      // specialization: on-if-do family maps back to an eca fact
      auto blank = [](const std::optional<Term>& t, int which) {
        return t ? *t : Term::var("_B" + std::to_string(which), next_global_var_index());
      };
      Clause c;
      if (r.on || r.do_ || r.else_do || r.after) {
        c.head = Term::compound(
            "eca", {blank(std::nullopt, 0), blank(r.on, 1), blank(r.if_, 2), blank(r.do_, 3),
                    blank(r.after, 4), blank(r.else_do, 5)});
      } else if (r.if_ && r.then) {
        // derivation rule: if-then
        c.head = *r.then;
        Term cond = *r.if_;
        c.body.push_back(BodyLiteral::positive(cond));
      } else {
        throw RuleMLError(RuleMLError::Kind::Unsupported,
                          "Rule specialization without on/do or if/then parts");
      }
      mod.clauses.push_back(std::move(c));
      continue;
    }
    throw RuleMLError(RuleMLError::Kind::Unsupported,
                      "only rules and clauses translate into .rr modules");
  }
  return mod;
}

}  // namespace reactor
