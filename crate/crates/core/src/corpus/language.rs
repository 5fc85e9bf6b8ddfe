//! Two-signal language identification: statistical detection on the claim
//! text, cross-checked against the language implied by the fact-checker's URL.

use url::Url;
use whatlang::Lang;

/// Returns a language code only when the text detector and the URL heuristic
/// agree on it.
pub fn detect_language(claim_text: &str, url: &str) -> Option<&'static str> {
    let from_text = text_language(claim_text)?;
    let from_domain = domain_language(url)?;
    (from_text == from_domain).then_some(from_text)
}

/// ISO-639-1 code of the statistically detected language, if any.
pub fn text_language(text: &str) -> Option<&'static str> {
    if text.chars().filter(|c| c.is_alphabetic()).count() < 3 {
        return None;
    }
    let info = whatlang::detect(text)?;
    iso_639_1(info.lang())
}

fn iso_639_1(lang: Lang) -> Option<&'static str> {
    Some(match lang {
        Lang::Eng => "en",
        Lang::Ita => "it",
        Lang::Fra => "fr",
        Lang::Deu => "de",
        Lang::Spa => "es",
        Lang::Por => "pt",
        Lang::Nld => "nl",
        Lang::Ara => "ar",
        Lang::Rus => "ru",
        Lang::Ukr => "uk",
        Lang::Pol => "pl",
        Lang::Tur => "tr",
        Lang::Ell => "el",
        Lang::Jpn => "ja",
        Lang::Kor => "ko",
        Lang::Cmn => "zh",
        Lang::Hin => "hi",
        Lang::Ind => "id",
        Lang::Swe => "sv",
        Lang::Dan => "da",
        Lang::Nob => "no",
        Lang::Fin => "fi",
        Lang::Ces => "cs",
        Lang::Ron => "ro",
        Lang::Hun => "hu",
        Lang::Heb => "he",
        Lang::Pes => "fa",
        Lang::Tgl => "tl",
        Lang::Ben => "bn",
        Lang::Urd => "ur",
        Lang::Tha => "th",
        Lang::Vie => "vi",
        Lang::Cat => "ca",
        Lang::Hrv => "hr",
        Lang::Srp => "sr",
        Lang::Bul => "bg",
        Lang::Slk => "sk",
        Lang::Slv => "sl",
        Lang::Lit => "lt",
        Lang::Lav => "lv",
        Lang::Est => "et",
        _ => return None,
    })
}

/// Fact-checking sites whose domain alone does not reveal the language.
/// Longest matching suffix wins.
const KNOWN_HOSTS: &[(&str, &str)] = &[
    ("politifact.com", "en"),
    ("snopes.com", "en"),
    ("factcheck.org", "en"),
    ("fullfact.org", "en"),
    ("washingtonpost.com", "en"),
    ("leadstories.com", "en"),
    ("checkyourfact.com", "en"),
    ("usatoday.com", "en"),
    ("reuters.com", "en"),
    ("apnews.com", "en"),
    ("factcheck.afp.com", "en"),
    ("factual.afp.com", "es"),
    ("factuel.afp.com", "fr"),
    ("checamos.afp.com", "pt"),
    ("faktencheck.afp.com", "de"),
    ("sprawdzam.afp.com", "pl"),
    ("factchecking.afp.com", "ar"),
    ("healthfeedback.org", "en"),
    ("climatefeedback.org", "en"),
    ("sciencefeedback.co", "en"),
    ("africacheck.org", "en"),
    ("boomlive.in", "en"),
    ("altnews.in", "en"),
    ("rappler.com", "en"),
    ("verafiles.org", "en"),
    ("logicallyfacts.com", "en"),
    ("newsmeter.in", "en"),
    ("thequint.com", "en"),
    ("misbar.com", "ar"),
    ("fatabyyano.net", "ar"),
    ("aosfatos.org", "pt"),
    ("correctiv.org", "de"),
    ("facta.news", "it"),
    ("open.online", "it"),
    ("newtral.es", "es"),
    ("chequeado.com", "es"),
    ("colombiacheck.com", "es"),
    ("animalpolitico.com", "es"),
    ("teyit.org", "tr"),
    ("stopfake.org", "ru"),
];

/// Country-code and generic top-level domains with a dominant language.
const TLD_LANGUAGE: &[(&str, &str)] = &[
    ("it", "it"),
    ("fr", "fr"),
    ("de", "de"),
    ("at", "de"),
    ("es", "es"),
    ("mx", "es"),
    ("ar", "es"),
    ("cl", "es"),
    ("pe", "es"),
    ("br", "pt"),
    ("pt", "pt"),
    ("nl", "nl"),
    ("pl", "pl"),
    ("tr", "tr"),
    ("ru", "ru"),
    ("ua", "uk"),
    ("gr", "el"),
    ("jp", "ja"),
    ("kr", "ko"),
    ("id", "id"),
    ("se", "sv"),
    ("dk", "da"),
    ("no", "no"),
    ("fi", "fi"),
    ("cz", "cs"),
    ("ro", "ro"),
    ("hu", "hu"),
    ("il", "he"),
    ("ir", "fa"),
    ("uk", "en"),
    ("us", "en"),
    ("au", "en"),
    ("nz", "en"),
    ("ie", "en"),
    ("ca", "en"),
    ("in", "en"),
    ("za", "en"),
    ("ng", "en"),
    ("ke", "en"),
    ("gh", "en"),
    ("ph", "en"),
    ("sg", "en"),
    ("com", "en"),
    ("org", "en"),
    ("net", "en"),
    ("info", "en"),
    ("news", "en"),
    ("edu", "en"),
    ("gov", "en"),
    ("co", "en"),
    ("io", "en"),
];

/// Language codes that commonly appear as a leading path segment or
/// subdomain on multilingual sites (`/es/...`, `fr.example.com`).
const SECTION_CODES: &[&str] = &[
    "en", "it", "fr", "de", "es", "pt", "nl", "ar", "ru", "uk", "pl", "tr", "el", "ja", "ko", "zh",
    "hi", "id", "sv", "da", "fi", "cs", "ro", "hu", "he", "fa",
];

/// Language implied by a fact-check URL: known site table, then language
/// sections, then top-level domain.
pub fn domain_language(url: &str) -> Option<&'static str> {
    let parsed = Url::parse(url.trim()).ok()?;
    let host = parsed.host_str()?.to_ascii_lowercase();
    let host = host.strip_prefix("www.").unwrap_or(&host);

    let known = KNOWN_HOSTS
        .iter()
        .filter(|(suffix, _)| host == *suffix || host.ends_with(&format!(".{suffix}")))
        .max_by_key(|(suffix, _)| suffix.len());
    if let Some((_, lang)) = known {
        return Some(lang);
    }

    let section = |s: &str| SECTION_CODES.iter().copied().find(|c| *c == s);
    if let Some(code) = parsed
        .path_segments()
        .and_then(|mut segs| segs.next())
        .map(str::to_ascii_lowercase)
        .and_then(|s| section(&s))
    {
        return Some(code);
    }
    if let Some(code) = host.split('.').next().and_then(section) {
        if host.split('.').count() > 2 {
            return Some(code);
        }
    }

    let tld = host.rsplit('.').next()?;
    TLD_LANGUAGE
        .iter()
        .find(|(t, _)| *t == tld)
        .map(|(_, lang)| *lang)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ENGLISH: [&str; 10] = [
        "The governor signed a bill that raises the minimum wage to fifteen dollars an hour.",
        "A viral video shows the president falling asleep during a press conference.",
        "Drinking hot water with lemon cures the coronavirus within three days.",
        "The city council voted to ban all gas stoves in new residential buildings.",
        "Scientists confirmed that the vaccine changes human DNA permanently.",
        "The senator said unemployment fell to its lowest level in fifty years.",
        "Photos show sharks swimming on a flooded highway after the hurricane.",
        "The new law requires every citizen to carry a digital identity card.",
        "More people died from the flu last year than from traffic accidents in the state.",
        "The company announced it will close all of its stores across the country next month.",
    ];

    const ITALIAN: [&str; 10] = [
        "Il governo ha approvato una legge che aumenta le tasse su tutti i pensionati.",
        "Un video virale mostra il sindaco che dorme durante il consiglio comunale.",
        "Bere acqua calda con il limone cura il virus in soli tre giorni.",
        "Il ministro ha dichiarato che la disoccupazione non è mai stata così bassa.",
        "Le foto mostrano squali che nuotano in una strada allagata dopo la tempesta.",
        "La nuova norma obbliga tutti i cittadini ad avere una carta di identità digitale.",
        "Secondo il presidente della regione, gli ospedali sono completamente pieni.",
        "Il vaccino modifica in modo permanente il nostro patrimonio genetico.",
        "La società ha annunciato la chiusura di tutti i suoi negozi nel paese.",
        "Nel mese scorso sono stati registrati più incidenti stradali che nell'anno precedente.",
    ];

    #[test]
    fn detector_separates_bilingual_fixture() {
        for s in ENGLISH {
            assert_eq!(text_language(s), Some("en"), "{s}");
        }
        for s in ITALIAN {
            assert_eq!(text_language(s), Some("it"), "{s}");
        }
    }

    #[test]
    fn agreement_required() {
        assert_eq!(
            detect_language(ENGLISH[0], "https://www.politifact.com/factchecks/2020/jan/01/x/"),
            Some("en")
        );
        assert_eq!(detect_language(ENGLISH[0], "https://pagellapolitica.it/fact-checking/x"), None);
        assert_eq!(detect_language(ITALIAN[0], "https://pagellapolitica.it/fact-checking/x"), Some("it"));
        assert_eq!(detect_language("", "https://www.politifact.com/x"), None);
        assert_eq!(detect_language(ENGLISH[0], "not a url"), None);
    }

    #[test]
    fn domain_rules() {
        assert_eq!(domain_language("https://factual.afp.com/doc.afp.com.123"), Some("es"));
        assert_eq!(domain_language("https://factcheck.afp.com/x"), Some("en"));
        assert_eq!(domain_language("https://www.example.com/es/noticia"), Some("es"));
        assert_eq!(domain_language("https://fr.example.com/article"), Some("fr"));
        assert_eq!(domain_language("https://fullfact.org/health/x/"), Some("en"));
        assert_eq!(domain_language("https://www.lemonde.fr/les-decodeurs/"), Some("fr"));
        assert_eq!(domain_language("https://example.xyz/"), None);
    }
}
