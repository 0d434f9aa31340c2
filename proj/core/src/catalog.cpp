// SPDX-License-Identifier: Apache-2.0
#include "stylerec/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "stylerec/io_util.hpp"

namespace stylerec {

namespace {

constexpr char kSchemaHeader[] = "kind\tid";
constexpr char kCatalogHeader[] =
    "id\ttags\tlog_price\tfabric\tavailability\timage_feat";
constexpr char kSalesHeader[] = "customer\tarticle\tt";

std::string line_ctx(const std::string& path, std::size_t lineno) {
  return path + ":" + std::to_string(lineno);
}

}  // namespace

int Schema::tag_index(const std::string& id) const {
  if (tag_idx_.size() != tags.size()) {
    tag_idx_.clear();
    for (std::size_t i = 0; i < tags.size(); ++i) tag_idx_[tags[i]] = i;
  }
  const auto it = tag_idx_.find(id);
  return it == tag_idx_.end() ? -1 : static_cast<int>(it->second);
}

int Schema::fiber_index(const std::string& id) const {
  if (fiber_idx_.size() != fibers.size()) {
    fiber_idx_.clear();
    for (std::size_t i = 0; i < fibers.size(); ++i) fiber_idx_[fibers[i]] = i;
  }
  const auto it = fiber_idx_.find(id);
  return it == fiber_idx_.end() ? -1 : static_cast<int>(it->second);
}

bool Article::available_at(Minutes t) const {
  for (const auto& w : availability)
    if (t >= w.start && t < w.end) return true;
  return false;
}

bool Article::available_in(Minutes from, Minutes to) const {
  for (const auto& w : availability)
    if (w.start < to && from < w.end) return true;
  return false;
}

int Catalog::index_of(const std::string& id) const {
  const auto it = index_.find(id);
  return it == index_.end() ? -1 : static_cast<int>(it->second);
}

const Article* Catalog::find(const std::string& id) const {
  const int i = index_of(id);
  return i < 0 ? nullptr : &articles[static_cast<std::size_t>(i)];
}

void Catalog::rebuild_index() {
  index_.clear();
  index_.reserve(articles.size());
  for (std::size_t i = 0; i < articles.size(); ++i) index_[articles[i].id] = i;
}

std::size_t PurchaseMatrix::pair_count() const {
  std::size_t n = 0;
  for (const auto& b : buyers) n += b.size();
  return n;
}

bool PurchaseMatrix::bought(std::size_t article_idx,
                            std::size_t customer_idx) const {
  const auto& b = buyers[article_idx];
  return std::binary_search(b.begin(), b.end(),
                            static_cast<std::uint32_t>(customer_idx));
}

void validate_article(const Article& a, const Schema& schema) {
  if (!a.fabric.empty()) {
    double sum = 0.0;
    for (const auto& [fiber, frac] : a.fabric) {
      if (schema.fiber_index(fiber) < 0)
        throw ParseError("article '" + a.id + "': unknown fiber '" + fiber + "'");
      if (frac < 0.0 || frac > 1.0)
        throw ParseError("article '" + a.id + "': fabric fraction out of [0,1]");
      sum += frac;
    }
    if (std::fabs(sum - 1.0) > 1e-6)
      throw ParseError("article '" + a.id + "': fabric fractions sum to " +
                       format_double(sum) + ", expected 1");
  }
  for (const auto& tag : a.tags)
    if (schema.tag_index(tag) < 0)
      throw ParseError("article '" + a.id + "': tag '" + tag +
                       "' not in schema");
  if (a.image_feat && a.image_feat->size() != schema.image_dim)
    throw ParseError("article '" + a.id + "': image feature length " +
                     std::to_string(a.image_feat->size()) + ", schema says " +
                     std::to_string(schema.image_dim));
  for (const auto& w : a.availability)
    if (!(w.start < w.end))
      throw ParseError("article '" + a.id + "': availability window start >= end");
  for (std::size_t i = 1; i < a.availability.size(); ++i)
    if (a.availability[i].start < a.availability[i - 1].end)
      throw ParseError("article '" + a.id + "': overlapping availability windows");
}

Schema load_schema(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines[0] != kSchemaHeader)
    throw ParseError(path + ": missing schema header '" + kSchemaHeader + "'");
  Schema s;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cols = split(lines[i], '\t');
    if (cols.size() != 2)
      throw ParseError(line_ctx(path, i + 1) + ": expected 2 columns");
    if (cols[0] == "tag") {
      s.tags.push_back(cols[1]);
    } else if (cols[0] == "fiber") {
      s.fibers.push_back(cols[1]);
    } else if (cols[0] == "image_dim") {
      s.image_dim = static_cast<std::size_t>(
          parse_uint(cols[1], line_ctx(path, i + 1)));
    } else {
      throw ParseError(line_ctx(path, i + 1) + ": unknown kind '" + cols[0] + "'");
    }
  }
  return s;
}

void save_schema(const Schema& schema, const std::string& path) {
  std::ostringstream out;
  out << kSchemaHeader << "\n";
  out << "image_dim\t" << schema.image_dim << "\n";
  for (const auto& t : schema.tags) out << "tag\t" << t << "\n";
  for (const auto& f : schema.fibers) out << "fiber\t" << f << "\n";
  write_text_file(path, out.str());
}

Catalog load_catalog(const std::string& path, const Schema& schema) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines[0] != kCatalogHeader)
    throw ParseError(path + ": missing catalog header");
  Catalog catalog;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string ctx = line_ctx(path, i + 1);
    const auto cols = split(lines[i], '\t');
    if (cols.size() != 6) throw ParseError(ctx + ": expected 6 columns");
    Article a;
    a.id = cols[0];
    if (a.id.empty()) throw ParseError(ctx + ": empty article id");
    if (!cols[1].empty())
      for (auto& tag : split(cols[1], ';')) a.tags.push_back(std::move(tag));
    a.log_price = parse_double(cols[2], ctx);
    if (!cols[3].empty()) {
      for (const auto& pair : split(cols[3], ';')) {
        const std::size_t colon = pair.find(':');
        if (colon == std::string::npos)
          throw ParseError(ctx + ": fabric entry '" + pair + "' lacks ':'");
        a.fabric.emplace_back(pair.substr(0, colon),
                              parse_double(pair.substr(colon + 1), ctx));
      }
    }
    if (!cols[4].empty()) {
      for (const auto& win : split(cols[4], ';')) {
        const std::size_t dash = win.find('-', 1);  // allow negative start
        if (dash == std::string::npos)
          throw ParseError(ctx + ": availability '" + win + "' lacks '-'");
        AvailabilityWindow w;
        w.start = parse_int(win.substr(0, dash), ctx);
        w.end = parse_int(win.substr(dash + 1), ctx);
        a.availability.push_back(w);
      }
    }
    if (!cols[5].empty()) {
      Vec feat;
      for (const auto& f : split(cols[5], ',')) feat.push_back(parse_double(f, ctx));
      a.image_feat = std::move(feat);
    }
    std::sort(a.availability.begin(), a.availability.end(),
              [](const auto& x, const auto& y) { return x.start < y.start; });
    validate_article(a, schema);
    if (!seen.insert(a.id).second)
      throw ParseError(ctx + ": duplicate article id '" + a.id + "'");
    catalog.articles.push_back(std::move(a));
  }
  catalog.rebuild_index();
  return catalog;
}

void save_catalog(const Catalog& catalog, const std::string& path) {
  std::ostringstream out;
  out << kCatalogHeader << "\n";
  for (const auto& a : catalog.articles) {
    out << a.id << '\t';
    for (std::size_t i = 0; i < a.tags.size(); ++i)
      out << (i ? ";" : "") << a.tags[i];
    out << '\t' << format_double(a.log_price) << '\t';
    for (std::size_t i = 0; i < a.fabric.size(); ++i)
      out << (i ? ";" : "") << a.fabric[i].first << ':'
          << format_double(a.fabric[i].second);
    out << '\t';
    for (std::size_t i = 0; i < a.availability.size(); ++i)
      out << (i ? ";" : "") << a.availability[i].start << '-'
          << a.availability[i].end;
    out << '\t';
    if (a.image_feat)
      for (std::size_t i = 0; i < a.image_feat->size(); ++i)
        out << (i ? "," : "") << format_double((*a.image_feat)[i]);
    out << '\n';
  }
  write_text_file(path, out.str());
}

std::vector<PurchaseSequence> load_sales(const std::string& path,
                                         const Catalog& catalog) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines[0] != kSalesHeader)
    throw ParseError(path + ": missing sales header");
  // std::map keeps customers in id order, which fixes the output order.
  std::map<std::string, std::vector<PurchaseEvent>> grouped;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string ctx = line_ctx(path, i + 1);
    const auto cols = split(lines[i], '\t');
    if (cols.size() != 3) throw ParseError(ctx + ": expected 3 columns");
    PurchaseEvent e;
    e.customer = cols[0];
    e.article = cols[1];
    e.t = parse_int(cols[2], ctx);
    if (catalog.index_of(e.article) < 0)
      throw ParseError(ctx + ": unknown article '" + e.article + "'");
    grouped[e.customer].push_back(std::move(e));
  }
  std::vector<PurchaseSequence> out;
  out.reserve(grouped.size());
  for (auto& [customer, events] : grouped) {
    std::stable_sort(events.begin(), events.end(),
                     [](const auto& a, const auto& b) { return a.t < b.t; });
    out.push_back(PurchaseSequence{customer, std::move(events)});
  }
  return out;
}

void save_sales(const std::vector<PurchaseSequence>& sales,
                const std::string& path) {
  std::ostringstream out;
  out << kSalesHeader << "\n";
  for (const auto& seq : sales)
    for (const auto& e : seq.events)
      out << e.customer << '\t' << e.article << '\t' << e.t << '\n';
  write_text_file(path, out.str());
}

std::vector<std::string> in_store(const Catalog& catalog, Minutes t) {
  std::vector<std::string> out;
  for (const auto& a : catalog.articles)
    if (a.available_at(t)) out.push_back(a.id);
  return out;
}

std::vector<std::size_t> in_store_indices(const Catalog& catalog, Minutes t) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < catalog.articles.size(); ++i)
    if (catalog.articles[i].available_at(t)) out.push_back(i);
  return out;
}

std::vector<std::size_t> in_store_during(const Catalog& catalog, Minutes from,
                                         Minutes to) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < catalog.articles.size(); ++i)
    if (catalog.articles[i].available_in(from, to)) out.push_back(i);
  return out;
}

Vec feature_vector(const Article& a, const Schema& schema) {
  Vec x(schema.feature_dim(), 0.0);
  for (const auto& tag : a.tags) {
    const int idx = schema.tag_index(tag);
    if (idx < 0)
      throw ParseError("article '" + a.id + "': tag '" + tag +
                       "' not in schema");
    x[static_cast<std::size_t>(idx)] = 1.0;
  }
  const std::size_t t = schema.tags.size();
  x[t] = a.log_price;
  for (const auto& [fiber, frac] : a.fabric) {
    const int idx = schema.fiber_index(fiber);
    if (idx < 0)
      throw ParseError("article '" + a.id + "': fiber '" + fiber +
                       "' not in schema");
    x[t + 1 + static_cast<std::size_t>(idx)] = frac;
  }
  if (a.image_feat) {
    const std::size_t base = t + 1 + schema.fibers.size();
    for (std::size_t i = 0; i < a.image_feat->size(); ++i)
      x[base + i] = (*a.image_feat)[i];
  }
  return x;
}

PurchaseMatrix build_purchase_matrix(const std::vector<PurchaseSequence>& sales,
                                     const std::vector<std::string>& customers,
                                     const std::vector<std::string>& articles) {
  PurchaseMatrix pm;
  pm.customers = customers;
  pm.articles = articles;
  pm.buyers.assign(articles.size(), {});
  std::unordered_map<std::string, std::uint32_t> cidx, aidx;
  for (std::size_t i = 0; i < customers.size(); ++i)
    cidx[customers[i]] = static_cast<std::uint32_t>(i);
  for (std::size_t i = 0; i < articles.size(); ++i)
    aidx[articles[i]] = static_cast<std::uint32_t>(i);
  for (const auto& seq : sales) {
    const auto c = cidx.find(seq.customer);
    if (c == cidx.end())
      throw PreconditionError("build_purchase_matrix: unknown customer '" +
                              seq.customer + "'");
    for (const auto& e : seq.events) {
      const auto a = aidx.find(e.article);
      if (a == aidx.end())
        throw PreconditionError("build_purchase_matrix: unknown article '" +
                                e.article + "'");
      pm.buyers[a->second].push_back(c->second);
    }
  }
  for (auto& b : pm.buyers) {
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
  }
  return pm;
}

}  // namespace stylerec
