#pragma once

#include <cmath>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "pairrank/common.hpp"
#include "pairrank/csv.hpp"

namespace pairrank {

/// One categorical attribute with its ordered level set. Level order fixes
/// the layout of the one-hot design and of the coefficient vector.
struct Attribute {
    std::string name;
    std::vector<std::string> levels;
};

struct ItemRecord {
    std::string item_id;
    // one resolved level index per attribute, in schema order
    std::vector<int> level_idx;
    // auxiliary covariates (propensity features such as log popularity)
    std::vector<double> covariates;
};

/// Item catalog with a shared categorical attribute schema. The design
/// vector of an item is the concatenated one-hot encoding over all
/// attributes; its dimension is the same for every item.
class ItemCatalog {
public:
    ItemCatalog() = default;

    ItemCatalog(std::vector<Attribute> schema, std::vector<ItemRecord> items,
                std::vector<std::string> covariate_names = {})
        : schema_(std::move(schema)),
          items_(std::move(items)),
          covariate_names_(std::move(covariate_names)) {
        offsets_.resize(schema_.size());
        int off = 0;
        for (std::size_t a = 0; a < schema_.size(); ++a) {
            offsets_[a] = off;
            off += static_cast<int>(schema_[a].levels.size());
        }
        design_dim_ = off;
        for (std::size_t j = 0; j < items_.size(); ++j) {
            const auto& it = items_[j];
            if (!index_.emplace(it.item_id, static_cast<int>(j)).second)
                throw data_error("catalog: duplicate item_id '" + it.item_id + "'");
            if (it.level_idx.size() != schema_.size())
                throw data_error("catalog: item '" + it.item_id +
                                 "' does not have exactly one level per attribute");
            for (std::size_t a = 0; a < schema_.size(); ++a) {
                if (it.level_idx[a] < 0 ||
                    it.level_idx[a] >= static_cast<int>(schema_[a].levels.size()))
                    throw data_error("catalog: item '" + it.item_id +
                                     "' has an out-of-range level for attribute '" +
                                     schema_[a].name + "'");
            }
            if (!it.covariates.empty() && it.covariates.size() != covariate_names_.size())
                throw data_error("catalog: item '" + it.item_id + "' covariate count mismatch");
            for (double c : it.covariates)
                if (!std::isfinite(c))
                    throw data_error("catalog: item '" + it.item_id + "' has non-finite covariate");
        }
    }

    int n_items() const { return static_cast<int>(items_.size()); }
    int n_attributes() const { return static_cast<int>(schema_.size()); }
    int design_dim() const { return design_dim_; }

    const std::vector<Attribute>& schema() const { return schema_; }
    const std::vector<ItemRecord>& items() const { return items_; }
    const ItemRecord& item(int j) const { return items_.at(static_cast<std::size_t>(j)); }
    const std::vector<std::string>& covariate_names() const { return covariate_names_; }

    int item_index(const std::string& item_id) const {
        auto it = index_.find(item_id);
        if (it == index_.end()) throw data_error("catalog: unknown item_id '" + item_id + "'");
        return it->second;
    }

    bool has_item(const std::string& item_id) const { return index_.count(item_id) > 0; }

    /// flat coefficient index of (attribute a, level l)
    int beta_offset(int a, int level) const { return offsets_[static_cast<std::size_t>(a)] + level; }

    /// flat coefficient index of item j's level on attribute a
    int beta_index(int a, int item) const {
        return beta_offset(a, items_[static_cast<std::size_t>(item)].level_idx[static_cast<std::size_t>(a)]);
    }

    /// name of the flat coefficient k as (attribute, level)
    std::pair<std::string, std::string> beta_name(int k) const {
        for (std::size_t a = 0; a < schema_.size(); ++a) {
            const int off = offsets_[a];
            const int sz = static_cast<int>(schema_[a].levels.size());
            if (k >= off && k < off + sz)
                return {schema_[a].name, schema_[a].levels[static_cast<std::size_t>(k - off)]};
        }
        throw std::out_of_range("beta index out of range");
    }

    /// dense one-hot design vector of item j (mostly for oracles and tests;
    /// the hot indices via beta_index are what the estimator uses)
    std::vector<double> design_vector(int j) const {
        std::vector<double> x(static_cast<std::size_t>(design_dim_), 0.0);
        for (int a = 0; a < n_attributes(); ++a) x[static_cast<std::size_t>(beta_index(a, j))] = 1.0;
        return x;
    }

    /// Loads a catalog CSV: column item_id, one column per attribute, plus
    /// optional covariate columns prefixed cov_. Attribute level order is
    /// first appearance in the file.
    static ItemCatalog from_csv(const std::string& path) {
        const CsvTable t = read_csv(path);
        const int id_col = t.require_column("item_id", "catalog");
        std::vector<int> attr_cols;
        std::vector<int> cov_cols;
        std::vector<Attribute> schema;
        std::vector<std::string> cov_names;
        for (std::size_t c = 0; c < t.header.size(); ++c) {
            if (static_cast<int>(c) == id_col) continue;
            if (t.header[c].rfind("cov_", 0) == 0) {
                cov_cols.push_back(static_cast<int>(c));
                cov_names.push_back(t.header[c].substr(4));
            } else {
                attr_cols.push_back(static_cast<int>(c));
                schema.push_back({t.header[c], {}});
            }
        }
        if (schema.empty()) throw data_error("catalog: no attribute columns in " + path);

        std::vector<std::unordered_map<std::string, int>> level_of(schema.size());
        std::vector<ItemRecord> items;
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            const auto& row = t.rows[r];
            ItemRecord rec;
            rec.item_id = row[static_cast<std::size_t>(id_col)];
            if (rec.item_id.empty())
                throw data_error("catalog: empty item_id at line " +
                                 std::to_string(t.line_numbers[r]));
            for (std::size_t a = 0; a < schema.size(); ++a) {
                const std::string& lvl = row[static_cast<std::size_t>(attr_cols[a])];
                if (lvl.empty())
                    throw data_error("catalog: empty level for attribute '" + schema[a].name +
                                     "' at line " + std::to_string(t.line_numbers[r]));
                auto [it, inserted] = level_of[a].emplace(lvl, static_cast<int>(schema[a].levels.size()));
                if (inserted) schema[a].levels.push_back(lvl);
                rec.level_idx.push_back(it->second);
            }
            for (int c : cov_cols) {
                try {
                    rec.covariates.push_back(std::stod(row[static_cast<std::size_t>(c)]));
                } catch (const std::exception&) {
                    throw data_error("catalog: bad covariate value at line " +
                                     std::to_string(t.line_numbers[r]));
                }
            }
            items.push_back(std::move(rec));
        }
        return ItemCatalog(std::move(schema), std::move(items), std::move(cov_names));
    }

    void to_csv(const std::string& path) const {
        CsvWriter w(path);
        std::vector<std::string> header{"item_id"};
        for (const auto& a : schema_) header.push_back(a.name);
        for (const auto& c : covariate_names_) header.push_back("cov_" + c);
        w.row(header);
        for (const auto& it : items_) {
            std::vector<std::string> row{it.item_id};
            for (std::size_t a = 0; a < schema_.size(); ++a)
                row.push_back(schema_[a].levels[static_cast<std::size_t>(it.level_idx[a])]);
            for (double c : it.covariates) row.push_back(format_double(c));
            w.row(row);
        }
    }

private:
    std::vector<Attribute> schema_;
    std::vector<ItemRecord> items_;
    std::vector<std::string> covariate_names_;
    std::unordered_map<std::string, int> index_;
    std::vector<int> offsets_;
    int design_dim_ = 0;
};

/// Bidirectional user id <-> dense index map, built up in ingestion order.
struct UserIndex {
    std::vector<std::string> ids;
    std::unordered_map<std::string, int> index;

    int add_or_get(const std::string& user_id) {
        auto it = index.find(user_id);
        if (it != index.end()) return it->second;
        const int idx = static_cast<int>(ids.size());
        ids.push_back(user_id);
        index.emplace(user_id, idx);
        return idx;
    }

    int get(const std::string& user_id) const {
        auto it = index.find(user_id);
        if (it == index.end()) throw data_error("unknown user_id '" + user_id + "'");
        return it->second;
    }

    int size() const { return static_cast<int>(ids.size()); }
};

}  // namespace pairrank
