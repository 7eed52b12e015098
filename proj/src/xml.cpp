#include "reactor/xml.hpp"

#include <cctype>
#include <cstring>
#include <sstream>

namespace reactor {

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

namespace {

class XmlParser {
 public:
  explicit XmlParser(const std::string& src) : src_(src) {}

  XmlNode parse_document() {
    skip_misc();
    XmlNode root = parse_element();
    skip_misc();
    if (pos_ != src_.size()) fail("content after the document element");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw XmlError(pos_, what); }

  bool more() const { return pos_ < src_.size(); }
  char cur() const { return src_[pos_]; }
  bool starts(const char* s) const { return src_.compare(pos_, std::strlen(s), s) == 0; }

  void skip_ws() {
    while (more() && std::isspace(static_cast<unsigned char>(cur()))) ++pos_;
  }

  void skip_misc() {
    while (true) {
      skip_ws();
      if (starts("<?")) {
        auto end = src_.find("?>", pos_);
        if (end == std::string::npos) fail("unterminated processing instruction");
        pos_ = end + 2;
        continue;
      }
      if (starts("<!--")) {
        auto end = src_.find("-->", pos_);
        if (end == std::string::npos) fail("unterminated comment");
        pos_ = end + 3;
        continue;
      }
      if (starts("<!")) {  // doctype etc.
        auto end = src_.find('>', pos_);
        if (end == std::string::npos) fail("unterminated declaration");
        pos_ = end + 1;
        continue;
      }
      return;
    }
  }

  std::string parse_name() {
    std::size_t start = pos_;
    while (more() && (std::isalnum(static_cast<unsigned char>(cur())) || cur() == '_' ||
                      cur() == '-' || cur() == ':' || cur() == '.'))
      ++pos_;
    if (start == pos_) fail("a name");
    return src_.substr(start, pos_ - start);
  }

  std::string parse_attr_value() {
    if (!more() || (cur() != '"' && cur() != '\'')) fail("an attribute value");
    char quote = cur();
    ++pos_;
    std::string out;
    while (more() && cur() != quote) {
      if (cur() == '&') {
        out += parse_entity();
      } else {
        out.push_back(cur());
        ++pos_;
      }
    }
    if (!more()) fail("closing attribute quote");
    ++pos_;
    return out;
  }

  std::string parse_entity() {
    auto end = src_.find(';', pos_);
    if (end == std::string::npos || end - pos_ > 8) fail("an entity reference");
    std::string ent = src_.substr(pos_ + 1, end - pos_ - 1);
    pos_ = end + 1;
    if (ent == "amp") return "&";
    if (ent == "lt") return "<";
    if (ent == "gt") return ">";
    if (ent == "quot") return "\"";
    if (ent == "apos") return "'";
    if (!ent.empty() && ent[0] == '#') {
      int code = ent[1] == 'x' ? std::stoi(ent.substr(2), nullptr, 16) : std::stoi(ent.substr(1));
      if (code < 0x80) return std::string(1, static_cast<char>(code));
      // keep it simple: non-ASCII references round-trip as UTF-8
      std::string out;
      if (code < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (code >> 6)));
        out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
      } else {
        out.push_back(static_cast<char>(0xE0 | (code >> 12)));
        out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
      }
      return out;
    }
    fail("a known entity");
  }

  XmlNode parse_element() {
    if (!more() || cur() != '<') fail("'<'");
    ++pos_;
    XmlNode node;
    node.name = parse_name();
    while (true) {
      skip_ws();
      if (!more()) fail("end of start tag");
      if (cur() == '/') {
        ++pos_;
        if (!more() || cur() != '>') fail("'>' after '/'");
        ++pos_;
        return node;
      }
      if (cur() == '>') {
        ++pos_;
        break;
      }
      std::string key = parse_name();
      skip_ws();
      if (!more() || cur() != '=') fail("'=' in attribute");
      ++pos_;
      skip_ws();
      node.attrs.emplace_back(key, parse_attr_value());
    }
    // content
    while (true) {
      if (!more()) fail("closing tag for " + node.name);
      if (starts("<!--")) {
        auto end = src_.find("-->", pos_);
        if (end == std::string::npos) fail("unterminated comment");
        pos_ = end + 3;
        continue;
      }
      if (starts("<![CDATA[")) {
        auto end = src_.find("]]>", pos_);
        if (end == std::string::npos) fail("unterminated CDATA");
        node.text += src_.substr(pos_ + 9, end - pos_ - 9);
        pos_ = end + 3;
        continue;
      }
      if (starts("</")) {
        pos_ += 2;
        std::string name = parse_name();
        if (name != node.name) fail("mismatched closing tag " + name);
        skip_ws();
        if (!more() || cur() != '>') fail("'>' in closing tag");
        ++pos_;
        return node;
      }
      if (cur() == '<') {
        node.children.push_back(parse_element());
        continue;
      }
      if (cur() == '&') {
        node.text += parse_entity();
        continue;
      }
      node.text.push_back(cur());
      ++pos_;
    }
  }

  const std::string& src_;
  std::size_t pos_ = 0;
};

void write_node(const XmlNode& n, std::ostream& os, int indent, bool pretty) {
  auto pad = [&](int k) {
    if (pretty)
      for (int i = 0; i < k; ++i) os << "  ";
  };
  pad(indent);
  os << '<' << n.name;
  for (const auto& [k, v] : n.attrs) os << ' ' << k << "=\"" << xml_escape(v) << '"';
  // trim whitespace-only text
  std::string text = n.text;
  bool text_blank = true;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) text_blank = false;
  if (n.children.empty() && text_blank) {
    os << "/>";
    if (pretty) os << '\n';
    return;
  }
  os << '>';
  if (n.children.empty()) {
    os << xml_escape(text) << "</" << n.name << '>';
    if (pretty) os << '\n';
    return;
  }
  if (pretty) os << '\n';
  if (!text_blank) {
    pad(indent + 1);
    os << xml_escape(text);
    if (pretty) os << '\n';
  }
  for (const auto& c : n.children) write_node(c, os, indent + 1, pretty);
  pad(indent);
  os << "</" << n.name << '>';
  if (pretty) os << '\n';
}

}  // namespace

XmlNode xml_parse(const std::string& text) {
  XmlParser p(text);
  XmlNode root = p.parse_document();
  return root;
}

std::string xml_write(const XmlNode& root, bool pretty) {
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>";
  if (pretty) os << '\n';
  write_node(root, os, 0, pretty);
  return os.str();
}

}  // namespace reactor
