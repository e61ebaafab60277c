//! Big integers serialize as decimal strings.

pub mod integer {
    use rug::Integer;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &Integer, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }
}

pub mod integers {
    use rug::Integer;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &[Integer], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.to_string()))
    }
}
