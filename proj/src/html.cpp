#include "catalog/html.hpp"

#include "catalog/text.hpp"

#include <array>
#include <cctype>
#include <charconv>

namespace catalog::html {

namespace {

constexpr std::array<std::string_view, 14> kVoid = {"area", "base", "br", "col", "embed", "hr", "img",
                                                    "input", "link", "meta", "param", "source", "track", "wbr"};
constexpr std::array<std::string_view, 4> kRawText = {"script", "style", "textarea", "title"};
constexpr std::array<std::string_view, 4> kHidden = {"script", "style", "noscript", "template"};
constexpr std::array<std::string_view, 22> kClosesP = {
    "p",     "div",    "h1",     "h2",     "h3",      "h4",     "h5",         "h6",
    "ul",    "ol",     "table",  "section", "article", "header", "footer",    "blockquote",
    "pre",   "figure", "aside",  "nav",    "main",    "form"};

template <std::size_t N>
bool in(const std::array<std::string_view, N>& set, std::string_view v) {
    for (auto s : set) {
        if (s == v) return true;
    }
    return false;
}

void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

struct NamedEntity {
    std::string_view name;
    std::uint32_t cp;
};

constexpr std::array<NamedEntity, 24> kEntities = {{
    {"amp", '&'},      {"lt", '<'},        {"gt", '>'},       {"quot", '"'},     {"apos", '\''},
    {"nbsp", 0x20},    {"mdash", 0x2014},  {"ndash", 0x2013}, {"hellip", 0x2026}, {"rsquo", 0x2019},
    {"lsquo", 0x2018}, {"rdquo", 0x201D},  {"ldquo", 0x201C}, {"copy", 0xA9},    {"reg", 0xAE},
    {"trade", 0x2122}, {"eacute", 0xE9},   {"egrave", 0xE8},  {"uuml", 0xFC},    {"ouml", 0xF6},
    {"auml", 0xE4},    {"laquo", 0xAB},    {"raquo", 0xBB},   {"middot", 0xB7},
}};

class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    Node run() {
        Node doc;
        stack_.push_back(&doc);
        while (pos_ < src_.size()) {
            if (src_[pos_] == '<') {
                if (!tag()) text_until_next_tag(true);
            } else {
                text_until_next_tag(false);
            }
        }
        return doc;
    }

private:
    Node& top() { return *stack_.back(); }

    void add_text(std::string_view raw, bool decode) {
        if (raw.empty()) return;
        std::string t = decode ? decode_entities(raw) : std::string(raw);
        auto& kids = top().children;
        if (!kids.empty() && kids.back().kind == Node::Kind::Text) {
            kids.back().text += t;
            return;
        }
        Node n;
        n.kind = Node::Kind::Text;
        n.text = std::move(t);
        kids.push_back(std::move(n));
    }

    // Consumes text up to the next '<' (a lone '<' that opens no tag is text).
    void text_until_next_tag(bool include_lt) {
        std::size_t start = pos_;
        if (include_lt) ++pos_;
        while (pos_ < src_.size() && src_[pos_] != '<') ++pos_;
        add_text(src_.substr(start, pos_ - start), true);
    }

    bool tag() {
        auto rest = src_.substr(pos_);
        if (text::starts_with(rest, "<!--")) {
            auto end = src_.find("-->", pos_ + 4);
            pos_ = end == std::string_view::npos ? src_.size() : end + 3;
            return true;
        }
        if (text::starts_with(rest, "<!") || text::starts_with(rest, "<?")) {
            auto end = src_.find('>', pos_);
            pos_ = end == std::string_view::npos ? src_.size() : end + 1;
            return true;
        }
        if (text::starts_with(rest, "</")) {
            std::size_t i = pos_ + 2;
            std::string name = read_name(i);
            if (name.empty()) return false;
            auto end = src_.find('>', i);
            pos_ = end == std::string_view::npos ? src_.size() : end + 1;
            close(name);
            return true;
        }
        std::size_t i = pos_ + 1;
        std::string name = read_name(i);
        if (name.empty()) return false;

        Node el;
        el.kind = Node::Kind::Element;
        el.tag = name;
        bool self_closing = read_attrs(i, el.attrs);
        pos_ = i;

        if (in(kClosesP, name)) close_open_p();
        if (name == "li") close_if_open("li");

        if (in(kVoid, name) || self_closing) {
            top().children.push_back(std::move(el));
            return true;
        }
        top().children.push_back(std::move(el));
        stack_.push_back(&top().children.back());
        if (in(kRawText, name)) {
            std::string closing = "</" + name;
            std::size_t end = pos_;
            while (true) {
                end = src_.find("</", end);
                if (end == std::string_view::npos) break;
                if (text::to_lower(src_.substr(end, closing.size())) == closing) break;
                end += 2;
            }
            if (end == std::string_view::npos) end = src_.size();
            add_text(src_.substr(pos_, end - pos_), name == "title" || name == "textarea");
            pos_ = end;
        }
        return true;
    }

    std::string read_name(std::size_t& i) {
        std::string name;
        while (i < src_.size()) {
            char c = src_[i];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == ':' || c == '_') {
                name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
                ++i;
            } else {
                break;
            }
        }
        return name;
    }

    // Returns true when the tag ends with "/>".
    bool read_attrs(std::size_t& i, std::vector<std::pair<std::string, std::string>>& attrs) {
        bool self_closing = false;
        while (i < src_.size()) {
            char c = src_[i];
            if (c == '>') {
                ++i;
                return self_closing;
            }
            if (std::isspace(static_cast<unsigned char>(c))) {
                ++i;
                continue;
            }
            if (c == '/') {
                self_closing = true;
                ++i;
                continue;
            }
            self_closing = false;
            std::string key;
            while (i < src_.size() && !std::isspace(static_cast<unsigned char>(src_[i])) && src_[i] != '=' &&
                   src_[i] != '>' && !(src_[i] == '/' && i + 1 < src_.size() && src_[i + 1] == '>')) {
                key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(src_[i]))));
                ++i;
            }
            while (i < src_.size() && std::isspace(static_cast<unsigned char>(src_[i]))) ++i;
            std::string value;
            if (i < src_.size() && src_[i] == '=') {
                ++i;
                while (i < src_.size() && std::isspace(static_cast<unsigned char>(src_[i]))) ++i;
                if (i < src_.size() && (src_[i] == '"' || src_[i] == '\'')) {
                    char q = src_[i++];
                    auto end = src_.find(q, i);
                    if (end == std::string_view::npos) end = src_.size();
                    value = decode_entities(src_.substr(i, end - i));
                    i = end < src_.size() ? end + 1 : end;
                } else {
                    std::size_t start = i;
                    while (i < src_.size() && !std::isspace(static_cast<unsigned char>(src_[i])) && src_[i] != '>') ++i;
                    value = decode_entities(src_.substr(start, i - start));
                }
            }
            if (!key.empty()) attrs.emplace_back(std::move(key), std::move(value));
        }
        return self_closing;
    }

    void close(const std::string& name) {
        for (std::size_t k = stack_.size(); k-- > 1;) {
            if (stack_[k]->tag == name) {
                stack_.resize(k);
                return;
            }
        }
    }

    void close_open_p() {
        if (stack_.size() > 1 && top().tag == "p") stack_.pop_back();
    }

    void close_if_open(std::string_view name) {
        if (stack_.size() > 1 && top().tag == name) stack_.pop_back();
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    std::vector<Node*> stack_;
};

void collect_text(const Node& n, std::string& out) {
    if (n.kind == Node::Kind::Text) {
        out += n.text;
        return;
    }
    if (n.kind == Node::Kind::Element && in(kHidden, n.tag)) return;
    if (n.is_element("br")) out.push_back(' ');
    for (const auto& c : n.children) collect_text(c, out);
}

}  // namespace

std::optional<std::string_view> Node::attr(std::string_view name) const {
    for (const auto& [k, v] : attrs) {
        if (k == name) return std::string_view(v);
    }
    return std::nullopt;
}

Node parse(std::string_view html) { return Parser(html).run(); }

std::string text_content(const Node& node) {
    std::string out;
    collect_text(node, out);
    return out;
}

std::string decode_entities(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] != '&') {
            out.push_back(s[i++]);
            continue;
        }
        auto semi = s.find(';', i + 1);
        if (semi == std::string_view::npos || semi - i > 12) {
            out.push_back(s[i++]);
            continue;
        }
        auto ent = s.substr(i + 1, semi - i - 1);
        bool done = false;
        if (!ent.empty() && ent[0] == '#') {
            std::uint32_t cp = 0;
            std::from_chars_result r{};
            if (ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X')) {
                r = std::from_chars(ent.data() + 2, ent.data() + ent.size(), cp, 16);
            } else {
                r = std::from_chars(ent.data() + 1, ent.data() + ent.size(), cp, 10);
            }
            if (r.ec == std::errc{} && r.ptr == ent.data() + ent.size()) {
                append_utf8(out, cp);
                done = true;
            }
        } else {
            for (const auto& e : kEntities) {
                if (e.name == ent) {
                    append_utf8(out, e.cp);
                    done = true;
                    break;
                }
            }
        }
        if (done) {
            i = semi + 1;
        } else {
            out.push_back(s[i++]);
        }
    }
    return out;
}

}  // namespace catalog::html
