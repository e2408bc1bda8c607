#pragma once

#include <httplib.h>

#include "catalog/source.hpp"

#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>

namespace testsupport {

// Local HTTP server serving a mutable path -> (status, body) table.
class FixtureServer {
public:
    FixtureServer() {
        server_.Get(".*", [this](const httplib::Request& req, httplib::Response& res) {
            std::lock_guard lock(mu_);
            ++hits_[req.path];
            std::string key = req.path;
            if (!req.params.empty()) {
                key += "?";
                bool first = true;
                for (const auto& [k, v] : req.params) {
                    if (!first) key += "&";
                    key += k + "=" + v;
                    first = false;
                }
            }
            auto it = pages_.find(key);
            if (it == pages_.end()) it = pages_.find(req.path);
            if (it == pages_.end()) {
                res.status = 404;
                res.set_content("not found", "text/plain");
                return;
            }
            res.status = it->second.first;
            res.set_content(it->second.second, "text/html");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FixtureServer() {
        server_.stop();
        thread_.join();
    }

    void set(const std::string& path, std::string body, int status = 200) {
        std::lock_guard lock(mu_);
        pages_[path] = {status, std::move(body)};
    }
    int hits(const std::string& path) {
        std::lock_guard lock(mu_);
        return hits_[path];
    }
    std::string base() const { return "http://127.0.0.1:" + std::to_string(port_); }
    int port() const { return port_; }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::mutex mu_;
    std::map<std::string, std::pair<int, std::string>> pages_;
    std::map<std::string, int> hits_;
};

inline std::string filler_words(std::size_t n, const std::string& seed_word = "word") {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += seed_word + std::to_string(i % 17);
    }
    return out;
}

inline std::string article_page(const std::string& title, std::size_t words = 120,
                                const std::string& published = "") {
    std::string html = "<html><head><title>" + title + "</title>";
    if (!published.empty()) html += "<meta property=\"article:published_time\" content=\"" + published + "\">";
    html += "</head><body><nav><a href=\"/\">Home</a></nav><article><h1>" + title + "</h1>";
    html += "<p>" + filler_words(words / 2) + ".</p><p>" + filler_words(words - words / 2, "text") + ".</p>";
    html += "</article><footer>footer</footer></body></html>";
    return html;
}

inline std::string results_page(const std::vector<std::string>& hrefs) {
    std::string html = "<html><body><ul>";
    for (const auto& h : hrefs) html += "<li><a class=\"result\" href=\"" + h + "\">r</a></li>";
    html += "</ul><a href=\"/about\">about</a></body></html>";
    return html;
}

class MemoryLedger final : public catalog::ArticleLedger {
public:
    bool has_article(std::string_view canonical_url) const override {
        std::lock_guard lock(mu_);
        return urls_.count(std::string(canonical_url)) > 0;
    }
    void put_article(const catalog::Article& article) override {
        std::lock_guard lock(mu_);
        urls_.insert(article.canonical_url);
    }
    std::size_t size() const {
        std::lock_guard lock(mu_);
        return urls_.size();
    }

private:
    mutable std::mutex mu_;
    std::set<std::string> urls_;
};

}  // namespace testsupport
