// Copyright 2026 The Entex Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "entex/synth.h"

#include <algorithm>
#include <cstdio>
#include <set>

#include "entex/error.h"
#include "entex/random.h"
#include "entex/text.h"

namespace entex {

namespace {

const std::vector<std::string> kSyllables = {
    "ka", "lo", "mi", "ra", "ven", "tor", "zi", "bel", "nor", "sa",
    "qui", "dra", "fel", "mon", "ri", "ta", "ul", "xen", "po", "gar",
    "lu", "den", "vi", "ko", "sel", "am", "bri", "tes", "on", "mar"};

// Word endings per entity type, so names carry a learnable type signal.
const std::map<std::string, std::vector<std::string>> kTypeEndings = {
    {"brand", {"ex", "ora", "ix"}},
    {"product", {"tron", "pad", "max"}},
    {"person", {"son", "ina", "elle"}},
    {"location", {"burg", "ville", "mere"}},
    {"organization", {"corp", "tech", "soc"}},
    {"event", {"fest", "cade", "gala"}},
    {"category", {"ism", "ware", "craft"}}};

const std::map<std::string, std::vector<std::string>> kFiller = {
    {"en",
     {"the", "new", "best", "great", "offer", "shop", "today", "free",
      "shipping", "on", "with", "and", "for", "your", "season", "deal",
      "quality", "review", "price", "store", "buy", "top", "fresh", "classic",
      "guide", "visit", "near", "you", "our", "style"}},
    {"fr",
     {"le", "la", "nouveau", "meilleur", "offre", "boutique", "aujourd'hui",
      "livraison", "gratuite", "sur", "avec", "et", "pour", "votre", "saison",
      "qualité", "avis", "prix", "magasin", "acheter", "frais", "classique",
      "guide", "visitez", "près", "de", "chez", "notre", "élégant", "été"}},
    {"de",
     {"der", "die", "neu", "beste", "angebot", "laden", "heute", "kostenlos",
      "versand", "auf", "mit", "und", "für", "ihre", "saison", "qualität",
      "bewertung", "preis", "kaufen", "frisch", "klassisch", "führer",
      "besuchen", "nähe", "unser", "stil", "größe", "schön", "über",
      "straße"}},
    {"es",
     {"el", "la", "nuevo", "mejor", "oferta", "tienda", "hoy", "envío",
      "gratis", "en", "con", "y", "para", "su", "temporada", "calidad",
      "reseña", "precio", "comprar", "fresco", "clásico", "guía", "visite",
      "cerca", "nuestro", "estilo", "año", "niño", "más", "también"}}};

const std::map<std::string, std::vector<std::string>> kTypeWords = {
    {"brand", {"brand", "label", "maker", "products", "logo", "line"}},
    {"product", {"device", "model", "edition", "item", "gadget", "series"}},
    {"person", {"artist", "author", "player", "singer", "founder", "actor"}},
    {"location", {"city", "region", "river", "island", "valley", "town"}},
    {"organization",
     {"company", "agency", "union", "institute", "group", "council"}},
    {"event", {"festival", "summit", "cup", "fair", "race", "concert"}},
    {"category", {"genre", "cuisine", "style", "sport", "craft", "hobby"}}};

template <typename T>
const T &Pick(Rng &rng, const std::vector<T> &v) {
  return v[rng.Below(v.size())];
}

std::string Capitalize(const std::string &s) {
  std::string out = s;
  if (!out.empty() && out[0] >= 'a' && out[0] <= 'z') out[0] -= 'a' - 'A';
  return out;
}

std::string MakeWord(Rng &rng, const std::string &type) {
  int n = 1 + static_cast<int>(rng.Below(2));
  std::string w;
  for (int i = 0; i < n; ++i) w += Pick(rng, kSyllables);
  w += Pick(rng, kTypeEndings.at(type));
  if (rng.Bernoulli(0.2)) {
    size_t e = w.find('e');
    if (e != std::string::npos) w.replace(e, 1, "\xC3\xA9");  // é
  }
  return Capitalize(w);
}

std::string Join(const std::vector<std::string> &parts, const char *sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string Lower(const std::string &s) {
  std::string out = s;
  for (char &c : out) {
    if (c >= 'A' && c <= 'Z') c += 'a' - 'A';
  }
  return out;
}

// Appends tokens to a field text and records mention offsets.
struct FieldBuilder {
  std::string text;
  int length = 0;  // scalars

  void Word(const std::string &w) {
    if (!text.empty()) {
      text += ' ';
      ++length;
    }
    text += w;
    length += CodepointLength(w);
  }

  Span Mention(const std::string &field, const std::string &surface) {
    Word(surface);
    return {field, length - CodepointLength(surface), length};
  }

  void Punct(const char *p) {
    text += p;
    length += CodepointLength(p);
  }
};

}  // namespace

Json SynthMention::ToJson() const {
  return {{"doc_id", doc_id},
          {"mention_id", MentionId(doc_id, span)},
          {"field", span.field},
          {"start", span.start},
          {"end", span.end},
          {"surface", surface},
          {"entity_id", entity_id},
          {"entity_type", entity_type}};
}

SynthMention SynthMention::FromJson(const Json &j) {
  SynthMention m;
  try {
    m.doc_id = j.at("doc_id").get<std::string>();
    m.span = SpanFromJson(j);
    m.surface = j.value("surface", "");
    m.entity_id = j.value("entity_id", "");
    m.entity_type = j.value("entity_type", "");
  } catch (const Json::exception &e) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("bad gold mention: ") + e.what());
  }
  return m;
}

std::map<std::string, std::string> SynthCorpus::EntityTexts() const {
  std::map<std::string, std::string> out;
  for (const SynthEntity &e : entities) out[e.id] = e.description;
  return out;
}

SynthCorpus GenerateCorpus(const SynthConfig &cfg) {
  if (cfg.num_docs < 0 || cfg.num_entities < 1) {
    throw Error(ErrorCode::kInvalidArgument, "bad synthetic corpus size");
  }
  Rng rng(cfg.seed);
  SynthCorpus corpus;
  const auto &types = SynthEntityTypes();

  std::set<std::string> titles;
  std::map<std::string, std::vector<std::string>> by_short;
  while (static_cast<int>(corpus.entities.size()) < cfg.num_entities) {
    SynthEntity e;
    e.type = types[corpus.entities.size() % types.size()];
    std::vector<std::string> words;
    if (!corpus.entities.empty() && rng.Bernoulli(0.2)) {
      words.push_back(Pick(rng, corpus.entities).short_name);
    } else {
      words.push_back(MakeWord(rng, e.type));
    }
    int extra = rng.Bernoulli(0.15) ? 2 : 1;
    for (int i = 0; i < extra; ++i) words.push_back(MakeWord(rng, e.type));
    e.title = Join(words, " ");
    if (!titles.insert(e.title).second) continue;
    char id[16];
    std::snprintf(id, sizeof(id), "E%04zu", corpus.entities.size() + 1);
    e.id = id;
    e.short_name = words.front();
    if (rng.Bernoulli(0.5)) e.redirects.push_back(Join(words, ""));
    std::vector<std::string> desc = {e.title, "is", "a", e.type};
    const auto &tw = kTypeWords.at(e.type);
    for (int i = 0; i < 6; ++i) desc.push_back(Pick(rng, tw));
    for (int i = 0; i < 4; ++i) desc.push_back(Pick(rng, kFiller.at("en")));
    e.description = Join(desc, " ");
    by_short[e.short_name].push_back(e.title);
    corpus.entities.push_back(std::move(e));
  }

  // Dump records.
  for (const SynthEntity &e : corpus.entities) {
    corpus.dump.push_back(PageRecord{e.id, e.title});
    corpus.dump.push_back(AnchorCountRecord{
        e.title, e.title, 5 + static_cast<int64_t>(rng.Below(56))});
    corpus.dump.push_back(AnchorCountRecord{
        e.short_name, e.title, 1 + static_cast<int64_t>(rng.Below(30))});
    for (const std::string &r : e.redirects) {
      corpus.dump.push_back(RedirectRecord{r, e.title});
      if (rng.Bernoulli(0.2)) {
        corpus.dump.push_back(RedirectRecord{r + "Official", r});
      }
    }
  }
  for (const auto &[short_name, targets] : by_short) {
    if (targets.size() > 1 && !titles.count(short_name)) {
      corpus.dump.push_back(DisambiguationRecord{short_name, targets});
    }
  }
  corpus.dump.push_back(RedirectRecord{"Ghost Page", "Missing Title"});
  corpus.dump.push_back(RedirectRecord{"Loop One", "Loop Two"});
  corpus.dump.push_back(RedirectRecord{"Loop Two", "Loop One"});
  corpus.dump.push_back(
      AnchorCountRecord{"2024", corpus.entities.front().title, 3});

  // Documents.
  const std::vector<std::string> langs = {"en", "en", "fr", "de", "es"};
  const std::vector<DocType> doc_types = {DocType::kAd, DocType::kWebPage,
                                          DocType::kUgc};
  for (int d = 0; d < cfg.num_docs; ++d) {
    Document doc;
    char id[16];
    std::snprintf(id, sizeof(id), "d%04d", d + 1);
    doc.id = id;
    doc.language = Pick(rng, langs);
    doc.doc_type = Pick(rng, doc_types);
    const auto &filler = kFiller.at(doc.language);

    for (const char *field : {"title", "body"}) {
      bool body = std::string(field) == "body";
      int words = body ? 15 + static_cast<int>(rng.Below(31))
                       : 4 + static_cast<int>(rng.Below(5));
      int mentions = body ? 1 + static_cast<int>(rng.Below(4))
                          : static_cast<int>(rng.Below(2));
      std::set<int> slots;
      while (static_cast<int>(slots.size()) < mentions) {
        slots.insert(static_cast<int>(rng.Below(words)));
      }
      FieldBuilder fb;
      for (int w = 0; w < words; ++w) {
        if (slots.count(w)) {
          const SynthEntity &e = Pick(rng, corpus.entities);
          double r = rng.Uniform();
          std::string surface = e.title;
          if (r < 0.2) {
            surface = e.short_name;
          } else if (r < 0.3 && !e.redirects.empty()) {
            surface = e.redirects.front();
          } else if (r < 0.4) {
            surface = Lower(e.title);
          }
          Span span = fb.Mention(field, surface);
          corpus.gold.push_back({doc.id, span, surface, e.id, e.type});
        } else {
          fb.Word(Pick(rng, filler));
        }
        if (rng.Bernoulli(0.06)) fb.Punct(rng.Bernoulli(0.5) ? "," : ".");
      }
      if (body) fb.Punct("!");
      doc.fields.push_back({field, fb.text});
    }
    corpus.docs.push_back(std::move(doc));
  }
  return corpus;
}

}  // namespace entex
