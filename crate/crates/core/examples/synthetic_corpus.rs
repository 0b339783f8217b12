//! Writes the synthetic demo corpus: 50 encounters over 40 subjects.
//!
//! Every discharge-summary section sentence also appears as a standalone
//! sentence in a prior note, except in encounters whose hospital course gets
//! one extra sentence that the notes never mention. A quarter of the
//! encounters have no family history section and one has an empty one.
//!
//! ```text
//! cargo run -p clinsum-core --example synthetic_corpus -- data/synthetic_notes.jsonl
//! ```

use std::io::Write;

use clinsum_core::corpus::ClinicalNote;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SUBJECTS: usize = 40;
const ENCOUNTERS: usize = 50;

struct Problem {
    complaint: &'static str,
    hpi: &'static str,
    course: &'static [&'static str],
}

const PROBLEMS: &[Problem] = &[
    Problem {
        complaint: "Chest pain.",
        hpi: "Substernal chest pain radiating to the left arm.",
        course: &[
            "Troponin was elevated and cardiology was consulted.",
            "Started on heparin drip and aspirin for NSTEMI.",
            "Cardiac catheterization showed a tight lesion in the LAD which was stented.",
        ],
    },
    Problem {
        complaint: "Shortness of breath.",
        hpi: "Progressive dyspnea on exertion and orthopnea over one week.",
        course: &[
            "Chest x-ray showed pulmonary edema consistent with CHF exacerbation.",
            "Diuresed with IV furosemide with improvement in symptoms.",
            "Echocardiogram showed an ejection fraction of 30 percent.",
        ],
    },
    Problem {
        complaint: "Fever and cough.",
        hpi: "Productive cough with fevers and chills for three days.",
        course: &[
            "Chest x-ray showed a right lower lobe pneumonia.",
            "Treated with ceftriaxone and azithromycin.",
            "Fever resolved and oxygen was weaned to room air.",
        ],
    },
    Problem {
        complaint: "Abdominal pain.",
        hpi: "Epigastric abdominal pain with nausea and vomiting since yesterday.",
        course: &[
            "Lipase was elevated consistent with acute pancreatitis.",
            "Managed with bowel rest and IV fluids.",
            "Diet was advanced and pain resolved.",
        ],
    },
    Problem {
        complaint: "Syncope.",
        hpi: "Witnessed syncopal episode at home without head strike.",
        course: &[
            "Telemetry showed paroxysmal atrial fibrillation.",
            "Started on metoprolol for rate control.",
            "Anticoagulation with warfarin was discussed and started.",
        ],
    },
    Problem {
        complaint: "Altered mental status.",
        hpi: "Family noted increasing confusion over two days.",
        course: &[
            "Urinalysis was consistent with urinary tract infection.",
            "Treated with ceftriaxone with improvement in mental status.",
            "Head CT was negative for acute process.",
        ],
    },
];

const HISTORY: &[&str] = &[
    "Hypertension.",
    "Diabetes mellitus type 2.",
    "Coronary artery disease.",
    "COPD.",
    "Atrial fibrillation.",
    "Chronic kidney disease stage 3.",
    "Hyperlipidemia.",
    "Hypothyroidism.",
];

const HISTORY_SHORT: &[&str] = &[
    "htn",
    "dm2",
    "cad",
    "copd",
    "afib",
    "ckd",
    "hld",
    "hypothyroid",
];

const SOCIAL: &[&str] = &[
    "Lives with his wife in [**Location 1234**].",
    "Lives alone in an apartment.",
    "Lives with her daughter.",
    "Former smoker, quit ten years ago.",
    "Current smoker, one pack per day.",
    "Denies alcohol use.",
    "Drinks alcohol socially.",
    "Retired teacher.",
];

const FAMILY: &[&str] = &[
    "Mother with breast cancer.",
    "Father died of myocardial infarction at age 60.",
    "Brother with diabetes mellitus.",
    "No family history of stroke.",
    "Sister with hypertension.",
];

const MEDS: &[&str] = &[
    "Aspirin 81 mg daily.",
    "Metoprolol 25 mg twice daily.",
    "Lisinopril 10 mg daily.",
    "Atorvastatin 40 mg nightly.",
    "Metformin 500 mg twice daily.",
    "Furosemide 20 mg daily.",
    "Levothyroxine 50 mcg daily.",
    "Omeprazole 20 mg daily.",
];

const NOVEL: &[&str] = &[
    "Course was complicated by acute kidney injury which resolved with fluids.",
    "Hospital stay was complicated by delirium managed with reorientation.",
    "Developed C diff colitis treated with oral vancomycin.",
];

const FILLER: &[&str] = &[
    "Vitals stable overnight.",
    "Patient resting comfortably.",
    "Tolerating diet without difficulty.",
    "Ambulating with assistance.",
    "Pain controlled on current regimen.",
    "Call light within reach.",
];

fn pick<'a>(rng: &mut ChaCha8Rng, pool: &[&'a str], lo: usize, hi: usize) -> Vec<&'a str> {
    let n = rng.gen_range(lo..=hi);
    let mut v: Vec<&str> = pool.choose_multiple(rng, n).copied().collect();
    v.sort_by_key(|s| pool.iter().position(|p| p == s));
    v
}

fn filler(rng: &mut ChaCha8Rng) -> String {
    pick(rng, FILLER, 1, 2).join(" ")
}

struct Enc {
    subject: String,
    id: String,
    day: u32,
}

fn note(e: &Enc, k: usize, day: u32, time: &str, category: &str, text: String) -> ClinicalNote {
    let month = 1 + (day / 28) % 12;
    let dom = 1 + day % 28;
    ClinicalNote {
        note_id: format!("{}-{k}", e.id),
        subject_id: e.subject.clone(),
        encounter_id: e.id.clone(),
        chart_date: format!("2150-{month:02}-{dom:02} {time}"),
        category: category.to_string(),
        text,
    }
}

fn encounter(rng: &mut ChaCha8Rng, idx: usize, e: &Enc) -> Vec<ClinicalNote> {
    let problem = &PROBLEMS[rng.gen_range(0..PROBLEMS.len())];
    let age = rng.gen_range(40..90);
    let sex = if rng.gen_bool(0.5) { "man" } else { "woman" };
    let hist_idx: Vec<usize> = {
        let n = rng.gen_range(2..=4);
        let mut v: Vec<usize> = (0..HISTORY.len())
            .collect::<Vec<_>>()
            .choose_multiple(rng, n)
            .copied()
            .collect();
        v.sort();
        v
    };
    let history: Vec<&str> = hist_idx.iter().map(|&i| HISTORY[i]).collect();
    let short: Vec<&str> = hist_idx.iter().map(|&i| HISTORY_SHORT[i]).collect();
    let social = pick(rng, SOCIAL, 1, 3);
    let family = pick(rng, FAMILY, 1, 2);
    let meds = pick(rng, MEDS, 2, 5);
    let course: Vec<&str> = problem.course.to_vec();
    let intro = format!(
        "{age} year old {sex} with {} presenting with {}",
        short.join(", "),
        problem.complaint.to_lowercase()
    );
    let hpi = [intro.as_str(), problem.hpi];

    let has_family = idx % 4 != 3;
    let empty_family = idx == 13;
    let novel = (idx % 6 == 5).then(|| NOVEL[idx % NOVEL.len()]);

    let admission = format!(
        "ADMISSION NOTE\nChief Complaint: {}\nHPI: {} {}\nPMH: {}\nSocial History: {}\n{}Home Medications:\n{}\nAssessment and Plan: admit to medicine.",
        problem.complaint,
        hpi[0],
        problem.hpi,
        short.join(", "),
        social[0],
        if has_family { "Family History: noncontributory.\n" } else { "" },
        meds.iter().map(|m| format!("- {}", m.to_lowercase())).collect::<Vec<_>>().join("\n"),
    );
    let nursing = format!(
        "Nursing progress note.\nPatient arrived on the floor from the ED. {}\n{} {}\n{}",
        problem.complaint,
        social.join(" "),
        family.join(" "),
        filler(rng)
    );
    let physician = format!(
        "Medicine progress note.\n{}\n{}\nPast history as follows. {}\n{}",
        hpi.join(" "),
        course[..2].join(" "),
        history.join(" "),
        filler(rng)
    );
    let pharmacy = format!(
        "Pharmacy medication reconciliation.\n{}\nNo known drug allergies.",
        meds.join("\n")
    );
    let radiology = format!("Radiology report.\n{}\nImpression: see above.", course[2]);

    let mut bhc = course.clone();
    if let Some(n) = novel {
        bhc.insert(2, n);
    }
    let family_block = if empty_family {
        "Family History:\n\n".to_string()
    } else if has_family {
        format!("Family History:\n{}\n\n", family.join(" "))
    } else {
        String::new()
    };
    let ds = format!(
        "Admission Date: [**2150-1-1**]    Discharge Date: [**2150-1-5**]\n\nService: MEDICINE\n\nAllergies:\nNo Known Allergies\n\n\
         Chief Complaint:\n{}\n\nHistory of Present Illness:\n{}\n\nPast Medical History:\n{}\n\n\
         Social History:\n{}\n\n{}Physical Exam:\nGeneral: no acute distress.\n\n\
         Medications on Admission:\n{}\n\nBrief Hospital Course:\n{}\n\n\
         Discharge Medications:\nsee medication list.\n\nDischarge Disposition:\nHome",
        problem.complaint,
        hpi.join(" "),
        history.join(" "),
        social.join(" "),
        family_block,
        meds.join("\n"),
        bhc.join(" "),
    );

    let mut notes = vec![
        note(e, 0, e.day, "08:00:00", "Admission note", admission),
        note(e, 1, e.day, "20:00:00", "Nursing", nursing),
        note(e, 2, e.day + 1, "09:30:00", "Physician", physician),
        note(e, 3, e.day + 1, "11:00:00", "Pharmacy", pharmacy),
        note(e, 4, e.day + 2, "14:00:00", "Radiology", radiology),
        note(e, 5, e.day + 4, "12:00:00", "Discharge summary", ds),
    ];
    if idx == 7 {
        notes.push(note(
            e,
            6,
            e.day + 6,
            "10:00:00",
            "Nursing",
            "Follow-up call placed.".to_string(),
        ));
    }
    notes
}

fn main() -> std::io::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "data/synthetic_notes.jsonl".to_string());
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut notes = Vec::new();
    for idx in 0..ENCOUNTERS {
        let subject = if idx < SUBJECTS { idx } else { idx - SUBJECTS };
        let e = Enc {
            subject: format!("S{subject:03}"),
            id: format!("E{idx:03}"),
            day: (idx as u32 * 9) % 300,
        };
        notes.extend(encounter(&mut rng, idx, &e));
    }
    notes.shuffle(&mut rng);
    let mut f = std::io::BufWriter::new(std::fs::File::create(&out)?);
    for n in &notes {
        writeln!(f, "{}", serde_json::to_string(n).expect("notes serialize"))?;
    }
    eprintln!("wrote {} notes to {out}", notes.len());
    Ok(())
}
