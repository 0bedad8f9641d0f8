use fundus_core::dataset::{
    parse_manifest, split_summary, write_manifest, DatasetSchema, ManifestRecord, Split,
};
use fundus_core::Error;

fn idrid_records() -> Vec<ManifestRecord> {
    (0..516)
        .map(|i| ManifestRecord {
            id: format!("IDRiD_{i:03}"),
            image_path: format!("img/{i:03}.jpg").into(),
            dr_grade: i % 5,
            dme_grade: Some(i % 3),
            split: if i < 413 { Split::Train } else { Split::Test },
        })
        .collect()
}

#[test]
fn idrid_split_percentages() {
    let schema = DatasetSchema::idrid();
    let mut buf = Vec::new();
    write_manifest(&idrid_records(), &schema, &mut buf).unwrap();
    let recs = parse_manifest(&buf[..], &schema).unwrap();
    let rep = split_summary(&recs, &schema);
    assert_eq!((rep.train.count, rep.test.count), (413, 103));
    assert_eq!(format!("{:.2}", rep.train.percent), "80.04");
    assert_eq!(format!("{:.2}", rep.test.percent), "19.96");
    let text = rep.to_string();
    assert!(text.contains("80.04%") && text.contains("19.96%"));
}

#[test]
fn schema_bounds() {
    let cases = [
        (DatasetSchema::messidor(), 4, Some(3)),
        (DatasetSchema::idrid(), 5, Some(3)),
        (DatasetSchema::deepdrid(), 5, None),
    ];
    for (schema, dr, dme) in cases {
        let header = if dme.is_some() {
            "id,image_path,dr_grade,dme_grade,split"
        } else {
            "id,image_path,dr_grade,split"
        };
        let row = |g: usize, m: usize| {
            if dme.is_some() {
                format!("{header}\na,a.png,{g},{m},TRAIN\n")
            } else {
                format!("{header}\na,a.png,{g},TRAIN\n")
            }
        };
        assert!(parse_manifest(row(dr - 1, 0).as_bytes(), &schema).is_ok());
        assert!(matches!(
            parse_manifest(row(dr, 0).as_bytes(), &schema),
            Err(Error::Validation(_))
        ));
        if let Some(m) = dme {
            assert!(parse_manifest(row(0, m - 1).as_bytes(), &schema).is_ok());
            assert!(matches!(
                parse_manifest(row(0, m).as_bytes(), &schema),
                Err(Error::Validation(_))
            ));
        }
    }
}
