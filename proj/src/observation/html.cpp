#include "cogweb/observation/html.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "cogweb/error.hpp"
#include "cogweb/util.hpp"

namespace cogweb::obs {

const std::string* HtmlNode::attr(std::string_view name) const {
  for (const auto& [k, v] : attrs) {
    if (k == name) return &v;
  }
  return nullptr;
}

namespace {

const std::set<std::string, std::less<>> kVoidElements = {"area", "base", "br",   "col",   "embed", "hr",  "img",
                                                          "input", "link", "meta", "param", "source", "track", "wbr"};
const std::set<std::string, std::less<>> kRawTextElements = {"script", "style", "textarea", "title"};
const std::set<std::string, std::less<>> kOptionalEndTags = {"p",  "li", "option", "optgroup", "td", "th",
                                                             "tr", "dt", "dd",     "thead",    "tbody"};

void append_utf8(std::string& out, unsigned long cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x110000) {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

const std::map<std::string, unsigned long, std::less<>> kNamedEntities = {
    {"amp", '&'},     {"lt", '<'},      {"gt", '>'},      {"quot", '"'},    {"apos", '\''},
    {"nbsp", ' '},    {"times", 0xD7},  {"copy", 0xA9},   {"reg", 0xAE},    {"hellip", 0x2026},
    {"ndash", 0x2013}, {"mdash", 0x2014}, {"laquo", 0xAB}, {"raquo", 0xBB},  {"middot", 0xB7},
    {"rsquo", 0x2019}, {"lsquo", 0x2018}, {"rdquo", 0x201D}, {"ldquo", 0x201C}, {"euro", 0x20AC},
    {"pound", 0xA3},  {"yen", 0xA5},    {"bull", 0x2022}, {"trade", 0x2122}, {"larr", 0x2190},
    {"rarr", 0x2192}, {"uarr", 0x2191}, {"darr", 0x2193}};

class Parser {
 public:
  explicit Parser(std::string_view src) : s_(src) {}

  HtmlNode parse() {
    HtmlNode doc;
    doc.tag = "#fragment";
    stack_.push_back(&doc);
    while (pos_ < s_.size()) {
      if (s_[pos_] == '<') {
        if (starts_with("<!--")) {
          const auto end = s_.find("-->", pos_ + 4);
          if (end == std::string_view::npos) fail("unterminated comment");
          pos_ = end + 3;
        } else if (starts_with("<!") || starts_with("<?")) {
          const auto end = s_.find('>', pos_);
          if (end == std::string_view::npos) fail("unterminated declaration");
          pos_ = end + 1;
        } else if (starts_with("</")) {
          end_tag();
        } else if (pos_ + 1 < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_ + 1]))) {
          start_tag();
        } else {
          text_until_tag();
        }
      } else {
        text_until_tag();
      }
    }
    while (stack_.size() > 1) {
      if (!kOptionalEndTags.count(stack_.back()->tag)) fail("unclosed <" + stack_.back()->tag + ">");
      stack_.pop_back();
    }
    return doc;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw Error(Errc::ParseError, why + " at offset " + std::to_string(pos_));
  }

  bool starts_with(std::string_view p) const { return s_.substr(pos_, p.size()) == p; }

  void text_until_tag() {
    auto end = s_.find('<', pos_ + 1);
    if (end == std::string_view::npos) end = s_.size();
    HtmlNode t;
    t.is_text = true;
    t.text = decode_entities(s_.substr(pos_, end - pos_));
    stack_.back()->children.push_back(std::move(t));
    pos_ = end;
  }

  static bool name_char(char c) {
    return !(c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '/' || c == '>' || c == '=');
  }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' || s_[pos_] == '\r' ||
                                s_[pos_] == '\f')) {
      ++pos_;
    }
  }

  std::string read_name() {
    const auto start = pos_;
    while (pos_ < s_.size() && name_char(s_[pos_])) ++pos_;
    return to_lower(s_.substr(start, pos_ - start));
  }

  void start_tag() {
    ++pos_;  // '<'
    HtmlNode el;
    el.tag = read_name();
    bool self_closing = false;
    for (;;) {
      skip_ws();
      if (pos_ >= s_.size()) fail("unterminated start tag <" + el.tag + ">");
      if (s_[pos_] == '>') {
        ++pos_;
        break;
      }
      if (starts_with("/>")) {
        pos_ += 2;
        self_closing = true;
        break;
      }
      if (s_[pos_] == '/') {
        ++pos_;
        continue;
      }
      std::string key = read_name();
      if (key.empty()) fail("bad attribute in <" + el.tag + ">");
      skip_ws();
      std::string value;
      if (pos_ < s_.size() && s_[pos_] == '=') {
        ++pos_;
        skip_ws();
        if (pos_ >= s_.size()) fail("missing attribute value");
        const char q = s_[pos_];
        if (q == '"' || q == '\'') {
          const auto end = s_.find(q, pos_ + 1);
          if (end == std::string_view::npos) fail("unterminated attribute value");
          value = decode_entities(s_.substr(pos_ + 1, end - pos_ - 1));
          pos_ = end + 1;
        } else {
          const auto start = pos_;
          while (pos_ < s_.size() && s_[pos_] != '>' && s_[pos_] != ' ' && s_[pos_] != '\t' && s_[pos_] != '\n') {
            ++pos_;
          }
          value = decode_entities(s_.substr(start, pos_ - start));
        }
      }
      if (!el.has_attr(key)) el.attrs.emplace_back(std::move(key), std::move(value));
    }
    // An open element with an optional end tag is closed by a sibling of the same kind.
    if (kOptionalEndTags.count(el.tag) && stack_.back()->tag == el.tag) stack_.pop_back();
    auto& siblings = stack_.back()->children;
    siblings.push_back(std::move(el));
    HtmlNode* node = &siblings.back();
    if (self_closing || kVoidElements.count(node->tag)) return;
    if (kRawTextElements.count(node->tag)) {
      const std::string close = "</" + node->tag;
      std::size_t end = pos_;
      for (;;) {
        end = s_.find("</", end);
        if (end == std::string_view::npos) fail("unterminated <" + node->tag + ">");
        if (to_lower(s_.substr(end, close.size())) == close) break;
        end += 2;
      }
      HtmlNode t;
      t.is_text = true;
      t.text = node->tag == "textarea" || node->tag == "title" ? decode_entities(s_.substr(pos_, end - pos_))
                                                               : std::string(s_.substr(pos_, end - pos_));
      node->children.push_back(std::move(t));
      pos_ = end;
      stack_.push_back(node);
      end_tag();
      return;
    }
    stack_.push_back(node);
  }

  void end_tag() {
    pos_ += 2;
    const std::string name = read_name();
    const auto gt = s_.find('>', pos_);
    if (gt == std::string_view::npos) fail("unterminated end tag");
    pos_ = gt + 1;
    if (kVoidElements.count(name)) return;
    for (std::size_t i = stack_.size(); i-- > 1;) {
      if (stack_[i]->tag == name) {
        for (std::size_t j = stack_.size() - 1; j > i; --j) {
          if (!kOptionalEndTags.count(stack_[j]->tag)) {
            fail("</" + name + "> closes unclosed <" + stack_[j]->tag + ">");
          }
        }
        stack_.resize(i);
        return;
      }
    }
    fail("stray </" + name + ">");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::vector<HtmlNode*> stack_;
};

bool is_blank(std::string_view s) { return trim(s).empty(); }

std::string first_token(std::string_view s) {
  const std::string t = trim(s);
  const auto sp = t.find_first_of(" \t\n");
  return to_lower(sp == std::string::npos ? t : t.substr(0, sp));
}

bool is_hidden(const HtmlNode& el) {
  if (el.has_attr("hidden")) return true;
  if (const auto* style = el.attr("style")) {
    std::string compact;
    for (char c : to_lower(*style)) {
      if (c != ' ' && c != '\t' && c != '\n') compact += c;
    }
    if (compact.find("display:none") != std::string::npos) return true;
  }
  return false;
}

void collect_text(const HtmlNode& n, std::string& out) {
  if (n.is_text) {
    out += n.text;
    return;
  }
  if (n.tag == "script" || n.tag == "style" || n.tag == "template" || is_hidden(n)) return;
  for (const auto& c : n.children) collect_text(c, out);
}

// HTML-AAM tag defaults; context-dependent tags are handled in role_for_element.
const std::map<std::string, std::string, std::less<>> kTagRoles = {
    {"article", "article"},   {"aside", "complementary"}, {"blockquote", "blockquote"},
    {"button", "button"},     {"caption", "caption"},     {"code", "code"},
    {"datalist", "listbox"},  {"dd", "definition"},       {"del", "deletion"},
    {"details", "group"},     {"dfn", "term"},            {"dialog", "dialog"},
    {"dt", "term"},           {"em", "emphasis"},         {"fieldset", "group"},
    {"figure", "figure"},     {"h1", "heading"},          {"h2", "heading"},
    {"h3", "heading"},        {"h4", "heading"},          {"h5", "heading"},
    {"h6", "heading"},        {"hr", "separator"},        {"html", "document"},
    {"ins", "insertion"},     {"li", "listitem"},         {"main", "main"},
    {"math", "math"},         {"menu", "list"},           {"meter", "meter"},
    {"nav", "navigation"},    {"ol", "list"},             {"optgroup", "group"},
    {"option", "option"},     {"output", "status"},       {"p", "paragraph"},
    {"progress", "progressbar"}, {"search", "search"},    {"strong", "strong"},
    {"sub", "subscript"},     {"sup", "superscript"},     {"table", "table"},
    {"tbody", "rowgroup"},    {"td", "cell"},             {"textarea", "textbox"},
    {"tfoot", "rowgroup"},    {"thead", "rowgroup"},      {"time", "time"},
    {"tr", "row"},            {"ul", "list"},             {"summary", "button"}};

std::string input_role(const HtmlNode& el) {
  const std::string type = to_lower(el.attr("type") ? trim(*el.attr("type")) : std::string("text"));
  const bool has_list = el.has_attr("list");
  if (type == "button" || type == "submit" || type == "reset" || type == "image") return "button";
  if (type == "checkbox") return "checkbox";
  if (type == "radio") return "radio";
  if (type == "range") return "slider";
  if (type == "number") return "spinbutton";
  if (type == "search") return has_list ? "combobox" : "searchbox";
  if (type == "hidden") return "none";
  if (type == "email" || type == "tel" || type == "text" || type == "url" || type == "password" || type.empty()) {
    return has_list ? "combobox" : "textbox";
  }
  return "generic";
}

}  // namespace

std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out += s[i];
      continue;
    }
    const auto semi = s.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 12) {
      out += '&';
      continue;
    }
    const std::string_view ent = s.substr(i + 1, semi - i - 1);
    unsigned long cp = 0;
    bool ok = false;
    if (!ent.empty() && ent[0] == '#') {
      try {
        std::size_t used = 0;
        const bool hex = ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X');
        const std::string digits(ent.substr(hex ? 2 : 1));
        cp = std::stoul(digits, &used, hex ? 16 : 10);
        ok = used == digits.size() && !digits.empty();
      } catch (const std::logic_error&) {
        ok = false;
      }
    } else if (auto it = kNamedEntities.find(ent); it != kNamedEntities.end()) {
      cp = it->second;
      ok = true;
    }
    if (!ok) {
      out += '&';
      continue;
    }
    append_utf8(out, cp);
    i = semi;
  }
  return out;
}

HtmlNode parse_html_fragment(std::string_view html) {
  HtmlNode doc = Parser(html).parse();
  const HtmlNode* element = nullptr;
  for (const auto& c : doc.children) {
    if (c.is_text) {
      if (!is_blank(c.text)) throw Error(Errc::ParseError, "text outside the fragment element");
      continue;
    }
    if (element) throw Error(Errc::ParseError, "fragment holds more than one element");
    element = &c;
  }
  if (!element) throw Error(Errc::ParseError, "fragment holds no element");
  return *element;
}

std::string role_for_element(const HtmlNode& el) {
  if (const auto* role = el.attr("role"); role && !is_blank(*role)) return first_token(*role);
  const std::string& tag = el.tag;
  if (tag == "a" || tag == "area") return el.has_attr("href") ? "link" : "generic";
  if (tag == "input") return input_role(el);
  if (tag == "select") {
    const auto* size = el.attr("size");
    const bool multi_row = size && !size->empty() && std::all_of(size->begin(), size->end(), ::isdigit) &&
                           std::stoi(*size) > 1;
    return el.has_attr("multiple") || multi_row ? "listbox" : "combobox";
  }
  if (tag == "img") {
    const auto* alt = el.attr("alt");
    return alt && alt->empty() ? "presentation" : "img";
  }
  if (tag == "header") return "banner";
  if (tag == "footer") return "contentinfo";
  if (tag == "section") return el.has_attr("aria-label") || el.has_attr("aria-labelledby") ? "region" : "generic";
  if (tag == "form") return el.has_attr("aria-label") || el.has_attr("aria-labelledby") ? "form" : "generic";
  if (tag == "th") return el.attr("scope") && *el.attr("scope") == "row" ? "rowheader" : "columnheader";
  if (auto it = kTagRoles.find(tag); it != kTagRoles.end()) return it->second;
  return "generic";
}

std::string name_for_element(const HtmlNode& el) {
  if (const auto* label = el.attr("aria-label"); label && !is_blank(*label)) return collapse_whitespace(*label);
  if (el.tag == "img") {
    const auto* alt = el.attr("alt");
    return alt ? collapse_whitespace(*alt) : std::string();
  }
  if (el.tag == "input") {
    const auto* type = el.attr("type");
    if (type && (*type == "button" || *type == "submit" || *type == "reset")) {
      if (const auto* v = el.attr("value")) return collapse_whitespace(*v);
    }
  }
  std::string text;
  if (el.tag != "textarea") {
    for (const auto& c : el.children) collect_text(c, text);
  }
  text = collapse_whitespace(text);
  if (text.empty()) {
    for (const char* a : {"placeholder", "title"}) {
      if (const auto* v = el.attr(a); v && !is_blank(*v)) return collapse_whitespace(*v);
    }
  }
  return text;
}

std::string infer_role(std::string_view outer_html) { return role_for_element(parse_html_fragment(outer_html)); }

std::string infer_name(std::string_view outer_html) { return name_for_element(parse_html_fragment(outer_html)); }

}  // namespace cogweb::obs
