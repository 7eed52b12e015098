#pragma once

#include <variant>

#include "reactor/messaging.hpp"
#include "reactor/parser.hpp"
#include "reactor/xml.hpp"

namespace reactor {

class RuleMLError : public std::runtime_error {
 public:
  enum class Kind { Malformed, Unsupported, Unserializable };
  RuleMLError(Kind kind, const std::string& what) : std::runtime_error(what), kind(kind) {}
  Kind kind;
};

/// <Rule> interchange form. Presence of parts determines the rule
/// specialization (on-if-do: ECA; if-then: derivation; if-do: production;
/// on-do: trigger...). The ECA time part has no slot in this form; rules
/// with a non-blank time part interchange as eca/6 Atom facts instead.
struct XmlEcaRule {
  std::string execution = "reasoning";  // active | messaging | reasoning
  std::string eval;                     // weak | strong | "" (parsed, stored, ignored)
  std::optional<Term> oid;
  std::optional<Term> label;
  std::optional<Term> qualification;
  std::optional<Term> on;
  std::optional<Term> if_;
  std::optional<Term> then;
  std::optional<Term> do_;
  std::optional<Term> after;
  std::optional<Term> else_;
  std::optional<Term> else_do;
  std::optional<Term> else_after;
};

/// <Message> interchange envelope.
struct RuleMLMessage {
  std::string mode = "outbound";  // inbound | outbound
  std::string directive;
  Term oid;       // conversation id
  Term protocol;
  Term sender;
  std::optional<Term> receiver;
  Term content;
};

/// IDL interface description: interface(Signature, Description) with
/// per-argument mode ("+", "-", "?") and type annotations carried on the
/// argument terms' annotation maps.
struct InterfaceDecl {
  Term signature;
  std::string description;
};

struct EventExprItem {
  Term expr;
};

struct QueryItem {
  std::vector<BodyLiteral> goals;
};

using RuleMLItem =
    std::variant<Clause, XmlEcaRule, RuleMLMessage, InterfaceDecl, EventExprItem, QueryItem>;

struct RuleMLDocument {
  std::vector<RuleMLItem> items;
};

/// Serialize to Reaction RuleML XML (root <RuleML>, one child per item).
std::string ruleml_export(const RuleMLDocument& doc);
/// Single-item convenience; the item becomes the document element.
std::string ruleml_export_item(const RuleMLItem& item);

/// Inverse of export on the supported element set. Unknown attributes are
/// preserved as term annotations; unknown elements raise Unsupported with
/// the offending names. Variable indices are freshened per item.
RuleMLDocument ruleml_import(const std::string& xml);

/// Structural validation against the shipped schema
/// (docs/reaction-ruleml-schema.md): known elements, allowed children,
/// attribute value ranges. Throws RuleMLError on violations.
void ruleml_validate(const std::string& xml);

/// Wire helpers for the tcp transport (XmlMessage payloads).
std::string message_to_xml(const Message& m, bool outbound);
Message message_from_xml(const std::string& xml);

/// Between engine Message and the interchange envelope.
RuleMLMessage to_ruleml_message(const Message& m, bool outbound);
Message from_ruleml_message(const RuleMLMessage& m);

/// `translate` support: .rr module to document (eca facts with a blank time
/// part become <Rule> items) and back.
RuleMLDocument document_from_module(const SourceModule& mod);
SourceModule module_from_document(const RuleMLDocument& doc, const Term& oid);

}  // namespace reactor
