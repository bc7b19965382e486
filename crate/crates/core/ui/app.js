async function getJson(url) {
  const res = await fetch(url);
  if (!res.ok) throw new Error(url + ": " + res.status);
  return (await res.json()).data;
}

function cell(row, text) {
  const td = document.createElement("td");
  td.textContent = text;
  row.appendChild(td);
}

async function showChallenges(project, user) {
  const list = document.getElementById("challenges");
  list.replaceChildren();
  const data = await getJson(`/projects/${project}/users/${user}/challenges`);
  for (const ch of data.open) {
    const li = document.createElement("li");
    li.textContent = `${ch.title}: ${ch.description} (${ch.points} pts)`;
    list.appendChild(li);
  }
}

async function load() {
  const project = document.getElementById("project").value;
  const body = document.querySelector("#board tbody");
  body.replaceChildren();
  const rows = await getJson(`/projects/${project}/leaderboard`);
  rows.forEach((e, i) => {
    const row = document.createElement("tr");
    cell(row, i + 1);
    cell(row, e.display_name);
    cell(row, e.score);
    cell(row, e.completed_challenges);
    cell(row, e.achievements);
    row.onclick = () => showChallenges(project, e.user_id);
    body.appendChild(row);
  });
}

document.getElementById("load").onclick = () => load().catch((e) => alert(e));
