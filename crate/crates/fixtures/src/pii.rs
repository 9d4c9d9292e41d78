//! Hand-built redaction cases: targets that must be replaced and look-alikes
//! that must survive untouched.

/// One case. `expected` uses `<EMAIL>`, `<PHONE>` and `<IP>` placeholders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PiiCase {
    pub name: &'static str,
    pub input: &'static str,
    pub expected: &'static str,
}

impl PiiCase {
    /// `(emails, phones, ips)` expected to be redacted.
    pub fn expected_counts(&self) -> (usize, usize, usize) {
        (
            self.expected.matches("<EMAIL>").count(),
            self.expected.matches("<PHONE>").count(),
            self.expected.matches("<IP>").count(),
        )
    }

    /// True when nothing should change.
    pub fn is_negative(&self) -> bool {
        self.input == self.expected
    }
}

const fn case(name: &'static str, input: &'static str, expected: &'static str) -> PiiCase {
    PiiCase { name, input, expected }
}

pub const PII_CASES: &[PiiCase] = &[
    // e-mail
    case("email_plain", "contacte joao@exemplo.pt", "contacte <EMAIL>"),
    case("email_plus_tag", "Escreva para maria.silva+news@correio.sapo.pt hoje.", "Escreva para <EMAIL> hoje."),
    case("email_mailto", "<a href=\"mailto:info@camara-lisboa.pt\">", "<a href=\"mailto:<EMAIL>\">"),
    case("email_two", "dois endereços: a@b.pt e c.d@e.com.br", "dois endereços: <EMAIL> e <EMAIL>"),
    case("email_parenthesised", "(geral@universidade.ulisboa.pt)", "(<EMAIL>)"),
    case("email_uppercase_final_stop", "Email: ANA.COSTA@EXEMPLO.PT.", "Email: <EMAIL>."),
    case("email_underscore_comma", "user_name@sub-domain.example.org, obrigado", "<EMAIL>, obrigado"),
    case("email_in_sentence", "Envie o currículo para rh@empresa.pt até sexta-feira.", "Envie o currículo para <EMAIL> até sexta-feira."),
    case("not_email_handle", "o utilizador @joao_silva no twitter", "o utilizador @joao_silva no twitter"),
    case("not_email_no_tld", "joao@localhost responde", "joao@localhost responde"),
    case("not_email_odds", "aposta 5@10 na corrida", "aposta 5@10 na corrida"),
    case("not_email_at_sign_alone", "encontro @ café central", "encontro @ café central"),
    // phones
    case("phone_pt_intl_spaced", "ligue +351 912 345 678", "ligue <PHONE>"),
    case("phone_pt_intl_compact", "+351912345678", "<PHONE>"),
    case("phone_pt_00_prefix", "00351 912 345 678", "<PHONE>"),
    case("phone_landline_333", "tel. 213 456 789.", "tel. <PHONE>."),
    case("phone_landline_2322", "tel. 21 345 67 89", "tel. <PHONE>"),
    case("phone_mobile_compact", "telemóvel 912345678", "telemóvel <PHONE>"),
    case("phone_dashes", "Fax: 229-876-543", "Fax: <PHONE>"),
    case("phone_uk", "+44 20 7946 0958", "<PHONE>"),
    case("phone_us", "Tel: +1 415 555 0132", "Tel: <PHONE>"),
    case("phone_two", "Contactos: 213 456 789 ou 912 345 678", "Contactos: <PHONE> ou <PHONE>"),
    case("phone_after_slash_space", "rui@isep.ipp.pt / 225 081 400", "<EMAIL> / <PHONE>"),
    case("not_phone_amount", "custou 300 000 000 euros", "custou 300 000 000 euros"),
    case("not_phone_tax_id", "NIF 123456789", "NIF 123456789"),
    case("not_phone_iso_date", "data 2023-12-01", "data 2023-12-01"),
    case("not_phone_ten_digits", "ref 1912345678", "ref 1912345678"),
    case("not_phone_population", "população de 2 345 678 habitantes", "população de 2 345 678 habitantes"),
    case("not_phone_postcode", "código postal 1000-001 Lisboa", "código postal 1000-001 Lisboa"),
    case("not_phone_score", "o jogo terminou 2-1 aos 90 minutos", "o jogo terminou 2-1 aos 90 minutos"),
    case("not_phone_clock", "às 12:30:45 em ponto", "às 12:30:45 em ponto"),
    case("not_phone_isbn", "ISBN 978-972-0-04567-8", "ISBN 978-972-0-04567-8"),
    case("not_phone_big_number", "preço: 1.234.567 euros", "preço: 1.234.567 euros"),
    // IPv4
    case("ip_public_and_private", "servidor em 8.8.8.8 e router 192.168.0.1", "servidor em <IP> e router 192.168.0.1"),
    case("ip_in_log_line", "acesso a partir de 193.136.1.10 registado", "acesso a partir de <IP> registado"),
    case("ip_labelled", "IP: 85.240.12.34", "IP: <IP>"),
    case("ip_small_octets", "o pacote chegou de 5.1.2.3 ontem", "o pacote chegou de <IP> ontem"),
    case("not_ip_loopback", "127.0.0.1", "127.0.0.1"),
    case("not_ip_private_10", "10.0.0.254 interno", "10.0.0.254 interno"),
    case("not_ip_shared", "100.64.0.1", "100.64.0.1"),
    case("not_ip_documentation", "192.0.2.44 é exemplo", "192.0.2.44 é exemplo"),
    case("not_ip_version_word", "versão 2.4.1.1", "versão 2.4.1.1"),
    case("not_ip_release_word", "release 10.4.2.1", "release 10.4.2.1"),
    case("not_ip_v_prefix", "v1.2.3.4", "v1.2.3.4"),
    case("not_ip_five_parts", "1.2.3.4.5", "1.2.3.4.5"),
    case("not_ip_octet_range", "999.1.1.1", "999.1.1.1"),
    case("not_ip_leading_zeros", "01.02.03.04", "01.02.03.04"),
    case("not_ip_date", "datas 12.03.2021", "datas 12.03.2021"),
    case("not_ip_three_parts", "versão 3.2.1", "versão 3.2.1"),
    case("not_ip_decimals", "Temperatura 21.5 graus, 3.14159", "Temperatura 21.5 graus, 3.14159"),
    // IPv6
    case("ipv6_public_final_stop", "dns 2001:4860:4860::8888.", "dns <IP>."),
    case("ipv6_compressed", "2606:4700::1111", "<IP>"),
    case("ipv6_bracketed", "[2a00:1450:4003:80a::200e]:443", "[<IP>]:443"),
    case("not_ipv6_loopback_linklocal", "local ::1 e fe80::1", "local ::1 e fe80::1"),
    case("not_ipv6_documentation", "doc 2001:db8::1", "doc 2001:db8::1"),
    case("not_ipv6_mac", "MAC 00:1a:2b:3c:4d:5e", "MAC 00:1a:2b:3c:4d:5e"),
    // mixed
    case("mixed_all_three", "a@b.pt, +351 912 345 678, 8.8.4.4", "<EMAIL>, <PHONE>, <IP>"),
    case("mixed_multiline", "Contacto:\nana@exemplo.pt\n213 456 789\n", "Contacto:\n<EMAIL>\n<PHONE>\n"),
    case("empty", "", ""),
];
