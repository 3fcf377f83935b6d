#include "asa/features.hpp"

#include <fstream>

#include "asa/util.hpp"

namespace asa {

namespace {

// Vocabulary v1: 17 universal POS tags + unknown, 50 dependency relations
// + unknown, 193 morphological feature=value entries + unknown. Slot names
// carry a section prefix so custom vocabulary files are self-describing.
const char* kSlotsV1[] = {
    "upos=ADJ", "upos=ADP", "upos=ADV", "upos=AUX", "upos=CCONJ", "upos=DET",
    "upos=INTJ", "upos=NOUN", "upos=NUM", "upos=PART", "upos=PRON", "upos=PROPN",
    "upos=PUNCT", "upos=SCONJ", "upos=SYM", "upos=VERB", "upos=X", "upos=<unk>",
    "deprel=acl", "deprel=advcl", "deprel=advmod", "deprel=amod", "deprel=appos", "deprel=aux",
    "deprel=case", "deprel=cc", "deprel=ccomp", "deprel=clf", "deprel=compound", "deprel=conj",
    "deprel=cop", "deprel=csubj", "deprel=dep", "deprel=det", "deprel=discourse", "deprel=dislocated",
    "deprel=expl", "deprel=fixed", "deprel=flat", "deprel=goeswith", "deprel=iobj", "deprel=list",
    "deprel=mark", "deprel=nmod", "deprel=nsubj", "deprel=nummod", "deprel=obj", "deprel=obl",
    "deprel=orphan", "deprel=parataxis", "deprel=punct", "deprel=reparandum", "deprel=root", "deprel=vocative",
    "deprel=xcomp", "deprel=acl:relcl", "deprel=advcl:relcl", "deprel=aux:pass", "deprel=cc:preconj", "deprel=compound:prt",
    "deprel=csubj:pass", "deprel=det:predet", "deprel=expl:it", "deprel=flat:foreign", "deprel=flat:name", "deprel=nmod:poss",
    "deprel=nsubj:pass", "deprel=obl:agent", "deprel=<unk>", "Number=Sing", "Number=Plur", "Number=Dual",
    "Gender=Masc", "Gender=Fem", "Gender=Neut", "Gender=Com", "Case=Nom", "Case=Acc",
    "Case=Dat", "Case=Gen", "Case=Voc", "Case=Loc", "Case=Ins", "Case=Abl",
    "Case=Par", "Case=Ess", "Case=Tra", "Case=Com", "Case=Abe", "Case=Cau",
    "Case=Ben", "Case=Ter", "Case=Add", "Case=Ade", "Case=All", "Case=Del",
    "Case=Ela", "Case=Ill", "Case=Ine", "Case=Lat", "Case=Sub", "Case=Sup",
    "Case=Tem", "Case=Per", "Case=Dis", "Case=Cmp", "Case=Equ", "Definite=Def",
    "Definite=Ind", "Definite=Spec", "Definite=Cons", "Definite=Com", "Degree=Pos", "Degree=Cmp",
    "Degree=Sup", "Degree=Abs", "Degree=Equ", "VerbForm=Fin", "VerbForm=Inf", "VerbForm=Part",
    "VerbForm=Ger", "VerbForm=Gdv", "VerbForm=Sup", "VerbForm=Conv", "VerbForm=Vnoun", "Mood=Ind",
    "Mood=Imp", "Mood=Sub", "Mood=Cnd", "Mood=Opt", "Mood=Jus", "Mood=Pot",
    "Mood=Des", "Mood=Nec", "Mood=Qot", "Mood=Adm", "Mood=Prp", "Tense=Past",
    "Tense=Pres", "Tense=Fut", "Tense=Imp", "Tense=Pqp", "Aspect=Imp", "Aspect=Perf",
    "Aspect=Prog", "Aspect=Prosp", "Aspect=Hab", "Aspect=Iter", "Voice=Act", "Voice=Pass",
    "Voice=Mid", "Voice=Antip", "Voice=Cau", "Voice=Rcp", "Voice=Dir", "Voice=Inv",
    "Person=0", "Person=1", "Person=2", "Person=3", "Person=4", "Polarity=Pos",
    "Polarity=Neg", "PronType=Prs", "PronType=Rcp", "PronType=Art", "PronType=Int", "PronType=Rel",
    "PronType=Dem", "PronType=Tot", "PronType=Neg", "PronType=Ind", "PronType=Exc", "PronType=Emp",
    "NumType=Card", "NumType=Ord", "NumType=Mult", "NumType=Frac", "NumType=Sets", "NumType=Dist",
    "NumType=Range", "Poss=Yes", "Reflex=Yes", "Foreign=Yes", "Abbr=Yes", "Typo=Yes",
    "Animacy=Anim", "Animacy=Inan", "Animacy=Hum", "Animacy=Nhum", "Clusivity=In", "Clusivity=Ex",
    "Evident=Fh", "Evident=Nfh", "Polite=Infm", "Polite=Form", "Polite=Elev", "Polite=Humb",
    "NounClass=Bantu1", "NounClass=Bantu2", "NounClass=Bantu3", "NounClass=Bantu4", "NounClass=Bantu5", "NounClass=Bantu6",
    "NounClass=Bantu7", "NounClass=Bantu8", "NounClass=Bantu9", "NounClass=Bantu10", "NounClass=Bantu11", "NounClass=Bantu12",
    "NounClass=Bantu13", "NounClass=Bantu14", "NounClass=Bantu15", "NounClass=Bantu16", "NounClass=Bantu17", "NounClass=Bantu18",
    "NounClass=Bantu19", "NounClass=Bantu20", "PartType=Mod", "PartType=Emp", "PartType=Res", "PartType=Inf",
    "PartType=Vbp", "AdpType=Prep", "AdpType=Post", "AdpType=Circ", "AdpType=Voc", "ConjType=Comp",
    "ConjType=Oper", "PunctType=Peri", "PunctType=Qest", "PunctType=Excl", "PunctType=Quot", "PunctType=Brck",
    "PunctType=Comm", "PunctType=Colo", "PunctType=Semi", "PunctType=Dash", "PunctSide=Ini", "PunctSide=Fin",
    "NameType=Geo", "NameType=Prs", "NameType=Giv", "NameType=Sur", "NameType=Nat", "NameType=Com",
    "NameType=Pro", "NameType=Oth", "Style=Arch", "Style=Rare", "Style=Form", "Style=Coll",
    "Style=Vrnc", "Style=Slng", "Style=Expr", "Style=Derg", "Style=Vulg", "Hyph=Yes",
    "Echo=Rdp", "NumForm=Word", "NumForm=Digit", "NumForm=Roman", "morph=<unk>",
};

constexpr int kUposCount = 18;
constexpr int kDeprelCount = 51;

}  // namespace

FeatureVocab::FeatureVocab(std::string version, std::vector<std::string> slots)
    : version_(std::move(version)), slots_(std::move(slots)) {
  require(int(slots_.size()) == kLanguageDim, "vocab ", version_, ": expected ", kLanguageDim,
          " slots, got ", slots_.size());
  for (int i = 0; i < int(slots_.size()); ++i) {
    require(index_.emplace(slots_[i], i).second, "vocab ", version_, ": duplicate slot '",
            slots_[i], "'");
    if (slots_[i] == "upos=<unk>") upos_unknown_ = i;
    if (slots_[i] == "deprel=<unk>") deprel_unknown_ = i;
    if (slots_[i] == "morph=<unk>") morph_unknown_ = i;
  }
  require(upos_unknown_ >= 0 && deprel_unknown_ >= 0 && morph_unknown_ >= 0, "vocab ", version_,
          ": missing an unknown slot");
  int upos = 0, deprel = 0, morph = 0;
  for (const auto& s : slots_) {
    if (s.rfind("upos=", 0) == 0) ++upos;
    else if (s.rfind("deprel=", 0) == 0) ++deprel;
    else if (s.rfind("morph=", 0) == 0) ++morph;
    else ++morph;  // bare feature=value entries belong to the morph section
  }
  require(upos == kUposCount, "vocab ", version_, ": expected ", kUposCount, " POS slots, got ",
          upos);
  require(deprel == kDeprelCount, "vocab ", version_, ": expected ", kDeprelCount,
          " deprel slots, got ", deprel);
  require(upos + deprel + morph == kLanguageDim, "vocab ", version_, ": bad section split");
}

const FeatureVocab& FeatureVocab::builtin() {
  static const FeatureVocab vocab("v1", [] {
    std::vector<std::string> s;
    s.reserve(kLanguageDim);
    for (const char* name : kSlotsV1) s.emplace_back(name);
    return s;
  }());
  return vocab;
}

FeatureVocab FeatureVocab::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), "vocab: cannot open ", path.string());
  std::string version;
  require(bool(std::getline(in, version)) && version.rfind("# vocab ", 0) == 0, "vocab ",
          path.string(), ": first line must be '# vocab <version>'");
  std::vector<std::string> slots;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    slots.push_back(line);
  }
  return FeatureVocab(version.substr(8), std::move(slots));
}

void FeatureVocab::write_file(const std::filesystem::path& path) const {
  std::ofstream out(path);
  require(out.good(), "vocab: cannot write ", path.string());
  out << "# vocab " << version_ << "\n";
  for (const auto& s : slots_) out << s << "\n";
  require(out.good(), "vocab: write failed: ", path.string());
}

int FeatureVocab::upos_slot(const std::string& tag) const {
  auto it = index_.find("upos=" + tag);
  return it == index_.end() ? upos_unknown_ : it->second;
}

int FeatureVocab::deprel_slot(const std::string& rel) const {
  auto it = index_.find("deprel=" + rel);
  return it == index_.end() ? deprel_unknown_ : it->second;
}

int FeatureVocab::morph_slot(const std::string& fv) const {
  auto it = index_.find("morph=" + fv);
  if (it != index_.end()) return it->second;
  it = index_.find(fv);  // morph slots are stored as bare feature=value
  return it == index_.end() ? morph_unknown_ : it->second;
}

}  // namespace asa
